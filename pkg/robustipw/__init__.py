"""
Robust IPW - Package
Trimmed inverse probability weighting, trimming-threshold selection,
local polynomial bias correction and subsampling inference.
"""
import logging

logger = logging.getLogger(__name__)

LOG_FORMAT = '%(asctime)s - %(name)s - %(levelname)s - %(message)s'

__version__ = "0.1.0"


def configure_logging(level="INFO", log_file=None):
    """Configure package logging for command-line use"""
    handlers = [logging.StreamHandler()]
    if log_file:
        handlers.append(logging.FileHandler(log_file))

    logging.basicConfig(
        level=getattr(logging, str(level).upper(), logging.INFO),
        format=LOG_FORMAT,
        handlers=handlers,
        force=True,
    )
    return logger
