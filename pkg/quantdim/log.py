"""
Logging bootstrap for command-line runs
"""
import logging.config
from pathlib import Path

from quantdim import settings


def setup_logging(level: str = None) -> None:
    """Apply settings.LOGGING, optionally forcing the app log level"""
    if settings.LOG_FILE:
        Path(settings.LOG_FILE).parent.mkdir(parents=True, exist_ok=True)

    logging.config.dictConfig(settings.LOGGING)

    if level:
        for app in settings.APPS:
            logging.getLogger(app).setLevel(level.upper())
