"""
Data model and CSV ingestion.
"""
import logging
from dataclasses import dataclass, field
from typing import Optional, Sequence, Tuple

import numpy as np
import pandas as pd

from ..errors import ConfigurationError, ContractError, DataParseError, DataValidationError

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class Observation:
    """One (outcome, treatment, covariates) record"""

    y: float
    d: int
    x: Tuple[float, ...]


def _frozen(array, dtype=float):
    array = np.array(array, dtype=dtype, copy=True)
    array.setflags(write=False)
    return array


@dataclass(frozen=True, eq=False)
class Dataset:
    """Immutable sample of outcomes, binary treatments and covariates

    Arrays are stored read-only so a Dataset can be shared between threads.
    ``true_weights`` is only set by simulation designs.
    """

    y: np.ndarray
    d: np.ndarray
    x: np.ndarray
    covariate_names: Tuple[str, ...]
    outcome_name: str = "y"
    treat_name: str = "d"
    true_weights: Optional[np.ndarray] = field(default=None)

    def __post_init__(self):
        y = _frozen(self.y)
        d = _frozen(self.d)
        x = np.asarray(self.x, dtype=float)
        if x.ndim == 1:
            x = x.reshape(-1, 1) if y.size else x.reshape(0, 0)
        x = _frozen(x)

        if y.size == 0:
            raise DataValidationError("Dataset must contain at least one observation")
        if d.shape != y.shape or x.shape[0] != y.size:
            raise ContractError(f"Column lengths differ: y={y.size}, d={d.size}, x={x.shape[0]}")
        if x.shape[1] != len(self.covariate_names):
            raise ContractError(f"{x.shape[1]} covariate columns but {len(self.covariate_names)} names")
        if not (np.all(np.isfinite(y)) and np.all(np.isfinite(x))):
            raise DataValidationError("All outcomes and covariates must be finite")
        bad = np.flatnonzero((d != 0) & (d != 1))
        if bad.size:
            raise DataValidationError(f"Treatment must be 0 or 1; row {bad[0] + 1} has {d[bad[0]]}")

        object.__setattr__(self, 'y', y)
        object.__setattr__(self, 'd', _frozen(d, np.int8))
        object.__setattr__(self, 'x', x)
        object.__setattr__(self, 'covariate_names', tuple(self.covariate_names))
        if self.true_weights is not None:
            weights = _frozen(self.true_weights)
            if weights.shape != y.shape:
                raise ContractError("true_weights must have one entry per observation")
            object.__setattr__(self, 'true_weights', weights)

    def __len__(self):
        return int(self.y.size)

    def __iter__(self):
        for i in range(len(self)):
            yield self[i]

    def __getitem__(self, i):
        return Observation(float(self.y[i]), int(self.d[i]), tuple(float(v) for v in self.x[i]))

    @property
    def n(self):
        return len(self)

    @property
    def treated_count(self):
        return int(self.d.sum())

    @property
    def column_names(self):
        return (self.outcome_name, self.treat_name) + self.covariate_names

    def column(self, name):
        """Return a covariate (or the outcome/treatment) column by name"""
        if name == self.outcome_name:
            return self.y
        if name == self.treat_name:
            return self.d
        try:
            return self.x[:, self.covariate_names.index(name)]
        except ValueError:
            raise ConfigurationError(f"Column '{name}' not present; have {list(self.column_names)}") from None

    def subset(self, indices):
        """Rows at the given indices, in the given order"""
        indices = np.asarray(indices, dtype=np.intp)
        return Dataset(
            y=self.y[indices],
            d=self.d[indices],
            x=self.x[indices],
            covariate_names=self.covariate_names,
            outcome_name=self.outcome_name,
            treat_name=self.treat_name,
            true_weights=None if self.true_weights is None else self.true_weights[indices],
        )

    def with_covariates(self, x, names):
        """Same outcomes and treatments with a new covariate matrix"""
        return Dataset(
            y=self.y, d=self.d, x=x, covariate_names=tuple(names),
            outcome_name=self.outcome_name, treat_name=self.treat_name,
            true_weights=self.true_weights,
        )


def _parse_cell(cell):
    try:
        return float(cell)
    except ValueError:
        return np.nan


def load_csv(path, outcome_col, treat_col, covariate_cols: Sequence[str]):
    """Read a comma-separated file with a header row into a Dataset

    Args:
        path: CSV file path
        outcome_col: Outcome column label
        treat_col: Treatment column label (values must be 0 or 1)
        covariate_cols: Covariate column labels, in model order

    Returns:
        Dataset with one observation per row, row order preserved
    """
    try:
        frame = pd.read_csv(path, dtype=str, keep_default_na=False, skipinitialspace=True)
    except FileNotFoundError:
        raise ConfigurationError(f"Input file not found: {path}") from None
    except pd.errors.EmptyDataError:
        raise DataParseError(f"Input file is empty: {path}") from None

    wanted = [outcome_col, treat_col] + list(covariate_cols)
    missing = [col for col in wanted if col not in frame.columns]
    if missing:
        raise ConfigurationError(f"Columns {missing} not found in {path}; available: {list(frame.columns)}")

    numeric = {}
    for col in wanted:
        raw = frame[col].str.strip()
        # float() is correctly rounded, so finite doubles round-trip bit-exact
        values = raw.map(_parse_cell).to_numpy(dtype=float)
        bad = np.flatnonzero(~np.isfinite(values))
        if bad.size:
            row = int(bad[0]) + 1
            cell = frame[col].iloc[bad[0]]
            raise DataParseError(f"Row {row}, column '{col}': cannot parse {cell!r} as a finite number")
        numeric[col] = values

    d = numeric[treat_col]
    bad = np.flatnonzero((d != 0.0) & (d != 1.0))
    if bad.size:
        raise DataValidationError(f"Row {int(bad[0]) + 1}, column '{treat_col}': treatment must be 0 or 1, got {d[bad[0]]:g}")

    x = np.column_stack([numeric[col] for col in covariate_cols]) if covariate_cols else np.empty((len(d), 0))
    dataset = Dataset(
        y=numeric[outcome_col], d=d, x=x,
        covariate_names=tuple(covariate_cols), outcome_name=outcome_col, treat_name=treat_col,
    )
    logger.info(f"Loaded {dataset.n} rows ({dataset.treated_count} treated) from {path}")
    return dataset
