"""
Configuration module - defaults, config.ini and environment overrides
"""
import os
import copy
import logging
import configparser

from dotenv import load_dotenv

from .errors import ConfigurationError

logger = logging.getLogger(__name__)

DEFAULT_CONFIG = {
    'estimation': {
        'model': 'logit',
        'estimand': 'mean',
    },
    'propensity': {
        'tolerance': 1e-8,
        'max_iterations': 100,
    },
    'trimming': {
        'mode': 'auto',
        's': 1.0,
        'fixed_b': 0.0,
    },
    'bias_correction': {
        'enabled': True,
        'order': 1,
        'bandwidth_c': 1.0,
    },
    'subsampling': {
        'replications': 1000,
        'alpha': 0.05,
        'seed': 20240101,
        'refit_propensity': True,
        'reselect_threshold': True,
        'threads': 1,
    },
    'data': {
        'data_dir': 'data',
        'nsw_url_root': 'https://users.nber.org/~rdehejia/data',
    },
    'logging': {
        'level': 'INFO',
        'log_file': '',
    },
}

# Environment variable -> (section, key)
ENV_OVERRIDES = {
    'IPW_DATA_DIR': ('data', 'data_dir'),
    'IPW_THREADS': ('subsampling', 'threads'),
    'IPW_LOG_LEVEL': ('logging', 'level'),
    'IPW_LOG_FILE': ('logging', 'log_file'),
}


def default_config_path():
    """Location of the config.ini shipped at the repository root"""
    return os.path.join(os.path.dirname(os.path.dirname(os.path.abspath(__file__))), 'config.ini')


def _coerce(raw, template, section, key):
    """Convert a string setting to the type of its default"""
    try:
        if isinstance(template, bool):
            lowered = str(raw).strip().lower()
            if lowered in ('1', 'true', 'yes', 'on'):
                return True
            if lowered in ('0', 'false', 'no', 'off'):
                return False
            raise ValueError(raw)
        if isinstance(template, int):
            return int(raw)
        if isinstance(template, float):
            return float(raw)
        return str(raw).strip()
    except ValueError:
        raise ConfigurationError(f"Invalid value {raw!r} for [{section}] {key}") from None


def load_config(path=None):
    """Load configuration from defaults, config.ini and environment variables

    Args:
        path: Optional config file; falls back to IPW_CONFIG, then the repository config.ini

    Returns:
        Nested dictionary keyed by section
    """
    load_dotenv()
    config = copy.deepcopy(DEFAULT_CONFIG)

    config_path = path or os.environ.get('IPW_CONFIG') or default_config_path()
    if os.path.exists(config_path):
        parser = configparser.ConfigParser()
        try:
            parser.read(config_path)
        except configparser.Error as e:
            raise ConfigurationError(f"Error reading {config_path}: {e}") from e

        for section in parser.sections():
            if section not in config:
                logger.warning(f"Ignoring unknown section [{section}] in {config_path}")
                continue
            for key, raw in parser[section].items():
                if key not in config[section]:
                    logger.warning(f"Ignoring unknown key [{section}] {key}")
                    continue
                config[section][key] = _coerce(raw, DEFAULT_CONFIG[section][key], section, key)
        logger.debug(f"Loaded configuration file {config_path}")
    elif path is not None:
        raise ConfigurationError(f"Config file not found at {path}")

    for env_key, (section, key) in ENV_OVERRIDES.items():
        if env_key in os.environ:
            config[section][key] = _coerce(os.environ[env_key], DEFAULT_CONFIG[section][key], section, key)

    logger.debug(f"Loaded configuration: data_dir={config['data']['data_dir']}, "
                 f"threads={config['subsampling']['threads']}")
    return config
