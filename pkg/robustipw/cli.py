"""
Command-line interface: estimate, simulate, replicate-nsw and fetch-data.
"""
import argparse
import logging
import sys

from . import configure_logging, propensity
from .config import load_config
from .dataset import fetch_nsw_data, load_csv, load_nsw
from .errors import ConfigurationError, IpwError
from .estimator import ATT, ESTIMANDS, MEAN, WEIGHTS_FROM_MODEL, WEIGHTS_TRUE, BiasConfig, PipelineConfig
from .oracle import (
    NORMAL, SHIFTED_EXPONENTIAL, WEIGHTS_LOGIT, WEIGHTS_ORACLE, REGIMES, SimulationDesign,
    bias_ablation_experiment, bias_recovery_experiment, bias_variance_check, coverage_experiment,
    hill_experiment, regime_experiment, selector_consistency, tail_balance_check,
    tail_diagnostics,
)
from .report import build_report, dumps, render_pretty, threshold_sweep, weight_histogram
from .resample import SubsamplingConfig, robust_inference
from .trimming import TrimmingSpec

logger = logging.getLogger(__name__)

EXPERIMENTS = ("regime", "coverage", "ablation", "bias", "bias-variance", "selector", "tail", "hill")

EPILOG = """\
warning codes:
  bandwidth_capped               bandwidth equation unattainable below 1; h = 1 used
  order_reduced                  local polynomial order lowered for lack of local points
  bandwidth_raised_to_threshold  threshold exceeded the bandwidth; window widened to b
  rate_condition                 n b^(2p+3) F(b) > 1; bias correction may dominate
  u74_assumption                 NSW u74 taken as zero 1974 earnings
  sample_size_mismatch           NSW group sizes differ from 185 treated / 1157 comparison
  replications_failed            some subsample fits failed and were skipped

exit codes:
  0 success, 1 unexpected error, 2 configuration, 3 data parse/validation,
  4 contract violation, 5 estimation/separation, 6 threshold/bandwidth,
  7 resampling, 8 numerical/diagnostic, 9 data download
"""


def _on_off(text):
    lowered = text.strip().lower()
    if lowered in ("on", "true", "yes", "1"):
        return True
    if lowered in ("off", "false", "no", "0"):
        return False
    raise argparse.ArgumentTypeError(f"expected on/off, got {text!r}")


def _floats(text):
    try:
        return tuple(float(v) for v in text.split(",") if v.strip())
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from None


def _add_pipeline_options(p):
    p.add_argument("--model", choices=propensity.MODEL_KINDS, help="propensity model")
    p.add_argument("--trim", help="none, fixed=<b>, auto or auto:s=<s>")
    p.add_argument("--order", type=int, help="local polynomial order p")
    p.add_argument("--bandwidth-c", type=float, help="bandwidth constant c")
    p.add_argument("--bias-correct", type=_on_off, help="on or off")


def _add_subsampling_options(p):
    p.add_argument("--alpha", type=float, help="1 - confidence level")
    p.add_argument("--m", type=int, help="subsample size (default floor(n / log n))")
    p.add_argument("--reps", type=int, help="subsample replications B")
    p.add_argument("--seed", type=int, help="random seed")
    p.add_argument("--threads", type=int, help="worker threads")


def _add_output_options(p):
    p.add_argument("--output", help="write the report here instead of stdout")
    p.add_argument("--pretty", action="store_true", help="human-readable text instead of JSON")
    p.add_argument("--progress", action="store_true", help="show progress bars")


def build_parser():
    parser = argparse.ArgumentParser(
        prog="robustipw",
        description="Robust inference for trimmed inverse probability weighting",
        epilog=EPILOG,
        formatter_class=argparse.RawDescriptionHelpFormatter,
    )
    parser.add_argument("--config", help="path to a config.ini")
    parser.add_argument("--log-level", help="DEBUG, INFO, WARNING or ERROR")
    sub = parser.add_subparsers(dest="cmd", required=True)

    est = sub.add_parser("estimate", help="estimate and robust CI from a CSV file",
                         epilog=EPILOG, formatter_class=argparse.RawDescriptionHelpFormatter)
    est.add_argument("--input", required=True, help="CSV file with a header row")
    est.add_argument("--outcome", required=True)
    est.add_argument("--treat", required=True)
    est.add_argument("--covariates", required=True, help="comma-separated covariate columns")
    est.add_argument("--estimand", choices=ESTIMANDS)
    est.add_argument("--sweep-reps", type=int, default=200, help="subsample replications per sweep point")
    est.add_argument("--no-sweep", action="store_true", help="skip the threshold-sensitivity sweep")
    _add_pipeline_options(est)
    _add_subsampling_options(est)
    _add_output_options(est)

    sim = sub.add_parser("simulate", help="Monte Carlo experiments on simulation designs",
                         epilog=EPILOG, formatter_class=argparse.RawDescriptionHelpFormatter)
    sim.add_argument("--experiment", choices=EXPERIMENTS, required=True)
    sim.add_argument("--gamma0", type=float, default=1.5)
    sim.add_argument("--n", type=int, default=5000)
    sim.add_argument("--mu1", type=_floats, default=(1.0,), help="mu1 polynomial coefficients c0,c1,...")
    sim.add_argument("--noise-sd", type=float, default=1.0)
    sim.add_argument("--family", choices=(NORMAL, SHIFTED_EXPONENTIAL), default=NORMAL)
    sim.add_argument("--weight-mode", choices=(WEIGHTS_ORACLE, WEIGHTS_LOGIT), default=WEIGHTS_ORACLE)
    sim.add_argument("--replications", type=int, default=200, help="simulated datasets")
    sim.add_argument("--regime", choices=REGIMES, default="none")
    sim.add_argument("--t", type=float, default=1.0, help="b_n a_n for moderate trimming")
    sim.add_argument("--b-grid", type=_floats, default=(1e-5, 1e-4, 1e-3))
    sim.add_argument("--x-grid", type=_floats, default=(10.0, 100.0, 1000.0))
    sim.add_argument("--k", type=int, default=1000, help="order statistics for the Hill estimate")
    sim.add_argument("--s", type=float, default=1.0, help="threshold exponent for the selector check")
    sim.add_argument("--bandwidth", type=float, help="fixed local polynomial bandwidth")
    _add_pipeline_options(sim)
    _add_subsampling_options(sim)
    _add_output_options(sim)

    nsw = sub.add_parser("replicate-nsw", help="ATT on the NSW treated / PSID comparison sample",
                         epilog=EPILOG, formatter_class=argparse.RawDescriptionHelpFormatter)
    nsw.add_argument("--data-dir", help="directory holding nsw_psid.csv (default IPW_DATA_DIR)")
    _add_pipeline_options(nsw)
    _add_subsampling_options(nsw)
    _add_output_options(nsw)

    fetch = sub.add_parser("fetch-data", help="download the public NSW files")
    fetch.add_argument("--data-dir", help="destination directory (default IPW_DATA_DIR)")
    fetch.add_argument("--url-root", help="base URL of the source files")
    return parser


def _pick(value, default):
    return default if value is None else value


def pipeline_from_args(args, config, estimand, weight_source=WEIGHTS_FROM_MODEL):
    """PipelineConfig from flags, falling back to the loaded configuration"""
    trim_cfg = config['trimming']
    if args.trim is not None:
        trimming = TrimmingSpec.parse(args.trim)
    elif trim_cfg['mode'] == 'fixed':
        trimming = TrimmingSpec(mode='fixed', b=trim_cfg['fixed_b'])
    else:
        trimming = TrimmingSpec(mode=trim_cfg['mode'], s=trim_cfg['s'])
    bias_cfg = config['bias_correction']
    bias = BiasConfig(
        enabled=_pick(args.bias_correct, bias_cfg['enabled']),
        order=_pick(args.order, bias_cfg['order']),
        bandwidth_c=_pick(args.bandwidth_c, bias_cfg['bandwidth_c']),
    )
    return PipelineConfig(
        model_kind=_pick(args.model, config['estimation']['model']),
        estimand=estimand,
        trimming=trimming,
        bias=bias,
        weight_source=weight_source,
        tolerance=config['propensity']['tolerance'],
        max_iterations=config['propensity']['max_iterations'],
    )


def subsampling_from_args(args, config, **overrides):
    sub_cfg = config['subsampling']
    settings = dict(
        m=args.m,
        replications=_pick(args.reps, sub_cfg['replications']),
        alpha=_pick(args.alpha, sub_cfg['alpha']),
        seed=_pick(args.seed, sub_cfg['seed']),
        refit_propensity=sub_cfg['refit_propensity'],
        reselect_threshold=sub_cfg['reselect_threshold'],
        threads=_pick(args.threads, sub_cfg['threads']),
        progress=getattr(args, 'progress', False),
    )
    settings.update(overrides)
    return SubsamplingConfig(**settings)


def _settings(pipeline, subsampling):
    return {
        'model': pipeline.model_kind,
        'estimand': pipeline.estimand,
        'trim': pipeline.trimming.describe(),
        'order': pipeline.bias.order,
        'bandwidth_c': pipeline.bias.bandwidth_c,
        'bias_correct': pipeline.bias.enabled,
        'alpha': subsampling.alpha,
        'm': subsampling.m,
        'reps': subsampling.replications,
        'seed': subsampling.seed,
    }


def inference_body(data, pipeline, subsampling, extra_warnings=()):
    """Headline fields of an estimate report plus the detailed blocks"""
    result = robust_inference(data, pipeline, subsampling)
    est = result.estimate
    warnings = list(dict.fromkeys(tuple(extra_warnings) + result.warnings))
    return result, {
        'theta_hat': est.theta_hat,
        'b': est.b,
        'n_trimmed': est.n_trimmed,
        'bias_hat': est.bias_hat,
        'theta_bc': est.theta_bc,
        's_n': est.s_n,
        'ci': result.ci,
        'gaussian_ci': result.gaussian_ci,
        'm': result.subsampling.m,
        'B': result.subsampling.replications,
        'seed': subsampling.seed,
        'warnings': warnings,
        'estimate': est.as_dict(),
        'subsampling': result.subsampling.as_dict(),
        'propensity': None if result.model is None else result.model.as_dict(),
    }


def _fitted_weights(data, result):
    if result.model is not None:
        return propensity.predict(result.model, data.x)
    return data.true_weights


def run_estimate(args, config):
    covariates = [c.strip() for c in args.covariates.split(",") if c.strip()]
    data = load_csv(args.input, args.outcome, args.treat, covariates)
    pipeline = pipeline_from_args(args, config, _pick(args.estimand, config['estimation']['estimand']))
    subsampling = subsampling_from_args(args, config)
    result, body = inference_body(data, pipeline, subsampling)
    weights = _fitted_weights(data, result)

    plot_data = {'weight_histogram': weight_histogram(data, weights)}
    if not args.no_sweep:
        sweep_config = subsampling_from_args(args, config, replications=args.sweep_reps, progress=False)
        plot_data['threshold_sweep'] = threshold_sweep(data, pipeline, weights, sweep_config)
    body.update({
        'input': args.input,
        'settings': _settings(pipeline, subsampling),
        'tail_diagnostics': _safe_tail_diagnostics(weights, pipeline.orientation),
        'plot_data': plot_data,
    })
    return build_report("estimate", body)


def _safe_tail_diagnostics(weights, orientation):
    try:
        return tail_diagnostics(weights, orientation)
    except IpwError as e:
        logger.warning(f"Tail diagnostic unavailable: {e}")
        return None


def run_replicate_nsw(args, config):
    data_dir = _pick(args.data_dir, config['data']['data_dir'])
    data, data_warnings = load_nsw(data_dir)
    subsampling = subsampling_from_args(args, config)
    body = {'data_dir': data_dir, 'n': data.n, 'n_treated': data.treated_count}

    untrimmed_args = argparse.Namespace(**{**vars(args), 'trim': 'none'})
    untrimmed = pipeline_from_args(untrimmed_args, config, ATT)
    _, body['untrimmed'] = inference_body(data, untrimmed, subsampling, data_warnings)

    trimmed_args = argparse.Namespace(**{**vars(args), 'trim': args.trim or 'auto'})
    trimmed = pipeline_from_args(trimmed_args, config, ATT)
    result, body['trimmed'] = inference_body(data, trimmed, subsampling, data_warnings)

    weights = _fitted_weights(data, result)
    body['settings'] = _settings(trimmed, subsampling)
    body['tail_diagnostics'] = _safe_tail_diagnostics(weights, trimmed.orientation)
    body['plot_data'] = {'weight_histogram': weight_histogram(data, weights)}
    rates = {leg: body[leg]['subsampling']['failure_rate'] for leg in ('untrimmed', 'trimmed')}
    logger.info(f"Subsample failure rate: untrimmed {rates['untrimmed']:.1%}, trimmed {rates['trimmed']:.1%}")
    body['subsample_failure_rate'] = rates
    body['warnings'] = list(dict.fromkeys(body['untrimmed']['warnings'] + body['trimmed']['warnings']))
    return build_report("replicate-nsw", body)


def design_from_args(args, seed):
    return SimulationDesign(
        gamma0=args.gamma0, n=args.n, mu1_coefficients=args.mu1, noise_sd=args.noise_sd,
        outcome_family=args.family, seed=seed, weight_mode=args.weight_mode,
    )


def run_simulate(args, config):
    seed = _pick(args.seed, config['subsampling']['seed'])
    design = design_from_args(args, seed)
    threads = _pick(args.threads, config['subsampling']['threads'])
    progress = args.progress
    reps = args.replications
    weight_source = WEIGHTS_TRUE if design.weight_mode == WEIGHTS_ORACLE else WEIGHTS_FROM_MODEL
    experiment = args.experiment

    if experiment == "regime":
        body = regime_experiment(design, args.regime, reps, t=args.t, threads=threads, progress=progress)
    elif experiment in ("coverage", "ablation"):
        pipeline = pipeline_from_args(args, config, MEAN, weight_source)
        subsampling = subsampling_from_args(args, config, threads=1, progress=False)
        run = coverage_experiment if experiment == "coverage" else bias_ablation_experiment
        body = run(design, pipeline, subsampling, reps, threads=threads, progress=progress)
    elif experiment == "bias":
        pipeline = pipeline_from_args(args, config, MEAN, weight_source)
        body = bias_recovery_experiment(design, reps, trimming=pipeline.trimming, bias=pipeline.bias,
                                        bandwidth=args.bandwidth, threads=threads, progress=progress)
    elif experiment == "bias-variance":
        body = bias_variance_check(design, args.b_grid, reps, threads=threads, progress=progress)
    elif experiment == "selector":
        body = selector_consistency(design, reps, s=args.s, threads=threads, progress=progress)
    elif experiment == "tail":
        body = tail_balance_check(design, args.x_grid)
        body['experiment'] = 'tail'
    elif experiment == "hill":
        body = hill_experiment(design, reps, args.k, threads=threads, progress=progress)
    else:
        raise ConfigurationError(f"Unknown experiment '{experiment}'")
    body.setdefault('design', design.describe())
    return build_report("simulate", body)


def run_fetch_data(args, config):
    data_dir = _pick(args.data_dir, config['data']['data_dir'])
    url_root = _pick(args.url_root, config['data']['nsw_url_root'])
    path = fetch_nsw_data(data_dir, url_root)
    return build_report("fetch-data", {'path': path})


COMMANDS = {
    "estimate": run_estimate,
    "simulate": run_simulate,
    "replicate-nsw": run_replicate_nsw,
    "fetch-data": run_fetch_data,
}


def write_report(report, args):
    text = render_pretty(report) if getattr(args, 'pretty', False) else dumps(report)
    output = getattr(args, 'output', None)
    if output:
        with open(output, 'w') as f:
            f.write(text)
        logger.info(f"Report written to {output}")
    else:
        sys.stdout.write(text)


def main(argv=None):
    """Entry point; returns the process exit code"""
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        config = load_config(args.config)
        configure_logging(_pick(args.log_level, config['logging']['level']),
                          config['logging']['log_file'] or None)
        report = COMMANDS[args.cmd](args, config)
        write_report(report, args)
    except IpwError as e:
        logger.error(f"{type(e).__name__}: {e}")
        return e.exit_code
    except Exception:
        logger.exception("Unexpected error")
        return 1
    return 0
