"""
Parametric probability-weight models e(X, pi): logit and probit maximum
likelihood, prediction, and per-observation influence functions.
"""
import logging
from dataclasses import dataclass
from typing import Tuple

import numpy as np
from scipy import special, stats

from .errors import ContractError, EstimationError, SeparationError

logger = logging.getLogger(__name__)

LOGIT = "logit"
PROBIT = "probit"
MODEL_KINDS = (LOGIT, PROBIT)

WEIGHT_FLOOR = 1e-12
DEFAULT_TOLERANCE = 1e-8
DEFAULT_MAX_ITERATIONS = 100
# an accepted step this large alongside extreme fitted weights means the
# coefficients are running off to infinity
DIVERGING_STEP = 1.0
# log-likelihood comparisons allow for summation roundoff near the optimum
LL_SLACK = 1e-13
# raw score components below SCORE_ROUNDOFF * eps * sum_i |x_ij| are summation noise
SCORE_ROUNDOFF = 16.0
MIN_STEP_FRACTION = 2.0 ** -40


@dataclass(frozen=True, eq=False)
class PropensityModel:
    """Fitted logit/probit model; coefficients are intercept first"""

    kind: str
    coefficients: np.ndarray
    converged: bool
    iterations: int
    log_likelihood: float
    covariate_names: Tuple[str, ...] = ()
    gradient_norm: float = float("nan")
    ll_history: Tuple[float, ...] = ()
    step_halvings: int = 0

    def __post_init__(self):
        coefficients = np.array(self.coefficients, dtype=float, copy=True)
        coefficients.setflags(write=False)
        object.__setattr__(self, 'coefficients', coefficients)

    @property
    def n_covariates(self):
        return self.coefficients.size - 1

    def as_dict(self):
        names = ("intercept",) + tuple(self.covariate_names)
        return {
            'kind': self.kind,
            'coefficients': {name: float(c) for name, c in zip(names, self.coefficients)},
            'converged': self.converged,
            'iterations': self.iterations,
            'log_likelihood': self.log_likelihood,
            'gradient_norm': self.gradient_norm,
            'step_halvings': self.step_halvings,
        }


def design_matrix(x):
    """Prepend the intercept column"""
    x = np.asarray(x, dtype=float)
    if x.ndim == 1:
        x = x.reshape(1, -1)
    return np.column_stack([np.ones(x.shape[0]), x])


def _check_kind(kind):
    if kind not in MODEL_KINDS:
        raise ContractError(f"Unknown model kind '{kind}'; expected one of {MODEL_KINDS}")


def link(kind, eta):
    """Response probability for a linear index (unclamped)"""
    if kind == LOGIT:
        return special.expit(eta)
    return stats.norm.cdf(eta)


def log_likelihood(kind, eta, d):
    if kind == LOGIT:
        return float(np.sum(d * eta - np.logaddexp(0.0, eta)))
    return float(np.sum(d * stats.norm.logcdf(eta) + (1 - d) * stats.norm.logcdf(-eta)))


def score_terms(kind, eta, d):
    """Per-observation score residual r and information weight v

    The score is X'r and the (expected) information is X'diag(v)X.
    """
    if kind == LOGIT:
        p = special.expit(eta)
        return d - p, p * (1.0 - p)
    # inverse Mills ratios, computed on the log scale to survive extreme indices
    log_pdf = stats.norm.logpdf(eta)
    ratio_treated = np.exp(log_pdf - stats.norm.logcdf(eta))
    ratio_control = np.exp(log_pdf - stats.norm.logcdf(-eta))
    return d * ratio_treated - (1 - d) * ratio_control, ratio_treated * ratio_control


def _column_scale(X):
    scale = np.max(np.abs(X), axis=0)
    scale[scale == 0] = 1.0
    return scale


def _collinear_columns(Z, names):
    """Columns that do not raise the rank when appended left to right"""
    redundant = []
    rank = 0
    for j in range(Z.shape[1]):
        new_rank = np.linalg.matrix_rank(Z[:, :j + 1])
        if new_rank == rank:
            redundant.append(names[j])
        rank = new_rank
    return redundant


def score_floor(X):
    """Per-component roundoff level of the raw score X'r"""
    return SCORE_ROUNDOFF * np.finfo(float).eps * np.sum(np.abs(X), axis=0)


def fit(data, kind=LOGIT, tol=DEFAULT_TOLERANCE, max_iter=DEFAULT_MAX_ITERATIONS, start=None):
    """Maximum likelihood fit by Newton-Raphson (logit) or Fisher scoring (probit)

    Steps are solved on a column-scaled design and halved whenever the
    log-likelihood would decrease. Convergence means the raw score
    sum_i x_i r_i has max-norm <= tol; a component whose roundoff level
    already exceeds tol (covariates of very large magnitude) is held to
    that level instead.

    Args:
        data: Dataset with binary treatments
        kind: logit or probit
        tol: Score tolerance
        max_iter: Iteration cap
        start: Optional initial coefficients on the original scale (default zeros)
    """
    _check_kind(kind)
    X = design_matrix(data.x)
    d = data.d.astype(float)
    n, k = X.shape
    names = ("intercept",) + tuple(data.covariate_names)

    scale = _column_scale(X)
    Z = X / scale
    if np.linalg.matrix_rank(Z) < k:
        raise EstimationError(f"Design matrix is rank deficient; collinear columns: {_collinear_columns(Z, names)}")
    if d.min() == d.max():
        raise SeparationError(f"All {n} observations have d={int(d[0])}; the {kind} MLE does not exist")

    if start is None:
        beta = np.zeros(k)
    else:
        start = np.asarray(start, dtype=float)
        if start.shape != (k,):
            raise ContractError(f"Start vector needs {k} coefficients, got {start.size}")
        beta = start * scale
    bound = np.maximum(tol, score_floor(X))
    eta = Z @ beta
    ll = log_likelihood(kind, eta, d)
    history = [ll]
    converged = False
    iterations = 0
    halvings = 0
    last_step = 0.0
    grad_norm = np.inf

    while True:
        r, v = score_terms(kind, eta, d)
        score = X.T @ r
        grad_norm = float(np.max(np.abs(score)))
        if np.all(np.abs(score) <= bound):
            converged = True
            break
        if iterations >= max_iter:
            break

        info = (Z * v[:, None]).T @ Z / n
        try:
            step = np.linalg.solve(info, Z.T @ r / n)
        except np.linalg.LinAlgError:
            step = np.linalg.lstsq(info, Z.T @ r / n, rcond=None)[0]

        t = 1.0
        while True:
            candidate = beta + t * step
            candidate_eta = Z @ candidate
            candidate_ll = log_likelihood(kind, candidate_eta, d)
            if candidate_ll >= ll - LL_SLACK * abs(ll):
                break
            t *= 0.5
            halvings += 1
            if t < MIN_STEP_FRACTION:
                break
        iterations += 1
        if candidate_ll < ll - LL_SLACK * abs(ll):
            logger.debug(f"{kind} step-halving stalled at iteration {iterations}")
            break
        last_step = float(np.max(np.abs(candidate - beta)))
        beta, eta, ll = candidate, candidate_eta, candidate_ll
        history.append(ll)

    fitted = link(kind, eta)
    extreme = np.any((fitted < WEIGHT_FLOOR) | (fitted > 1.0 - WEIGHT_FLOOR))
    if extreme and (not converged or last_step > DIVERGING_STEP):
        raise SeparationError(
            f"{kind} fit separates the sample: fitted weights reach "
            f"[{fitted.min():.3g}, {fitted.max():.3g}] with coefficients diverging"
        )
    if not converged:
        logger.warning(f"{kind} fit did not converge in {max_iter} iterations (score {grad_norm:.3g})")

    model = PropensityModel(
        kind=kind,
        coefficients=beta / scale,
        converged=converged,
        iterations=iterations,
        log_likelihood=ll,
        covariate_names=tuple(data.covariate_names),
        gradient_norm=grad_norm,
        ll_history=tuple(history),
        step_halvings=halvings,
    )
    logger.debug(f"Fitted {kind} model in {iterations} iterations ({halvings} step halvings), "
                 f"log-likelihood {ll:.6f}")
    return model


def linear_index(model, x):
    x = np.asarray(x, dtype=float)
    single = x.ndim == 1
    if single:
        x = x.reshape(1, -1)
    if x.shape[1] != model.n_covariates:
        raise ContractError(f"Expected {model.n_covariates} covariates, got {x.shape[1]}")
    eta = model.coefficients[0] + x @ model.coefficients[1:]
    return eta[0] if single else eta


def predict(model, x):
    """Fitted probability weight(s), clamped to [1e-12, 1 - 1e-12]"""
    eta = linear_index(model, x)
    return np.clip(link(model.kind, eta), WEIGHT_FLOOR, 1.0 - WEIGHT_FLOOR)


def influence(model, data):
    """Per-observation influence vectors h_i = I^{-1} x_i r_i of the MLE

    Returns an (n, d_x + 1) array whose rows average to ~0 at the MLE.
    """
    X = design_matrix(data.x)
    if X.shape[1] != model.coefficients.size:
        raise ContractError(f"Model has {model.coefficients.size} coefficients, data has {X.shape[1]} columns")
    scale = _column_scale(X)
    Z = X / scale
    eta = X @ model.coefficients
    r, v = score_terms(model.kind, eta, data.d.astype(float))

    info = (Z * v[:, None]).T @ Z / X.shape[0]
    if np.linalg.cond(info) > 1.0 / np.finfo(float).eps:
        raise EstimationError("Information matrix is singular; influence functions are undefined")
    scaled = np.linalg.solve(info, (Z * r[:, None]).T).T
    return scaled / scale
