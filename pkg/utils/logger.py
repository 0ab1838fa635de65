"""Module loggers writing to stderr, plus a log file outside debug mode.

Command output goes to stdout as JSON, so nothing here may write there.
"""

import logging
import sys
from pathlib import Path
from typing import Optional
from config.settings import settings
from utils.errors import DataError

LOG_FORMAT = "%(asctime)s - %(name)s - %(levelname)s - %(message)s"
LOG_DATE_FORMAT = "%Y-%m-%d %H:%M:%S"

# Created when the first file handler is attached
LOG_DIR = Path(__file__).parent.parent / "logs"


def get_log_level(level_name: str) -> int:
    """Logging constant for a level name; unknown names fall back to INFO."""
    return logging.getLevelNamesMapping().get(level_name.upper(), logging.INFO)


def _handler(handler: logging.Handler, level: int) -> logging.Handler:
    handler.setLevel(level)
    handler.setFormatter(logging.Formatter(LOG_FORMAT, LOG_DATE_FORMAT))
    return handler


def setup_logger(
    name: str,
    level: Optional[str] = None,
    log_file: Optional[str] = None
) -> logging.Logger:
    """
    Configure and return a logger instance.

    Args:
        name: Logger name (typically module name)
        level: Log level name (defaults to settings.LOG_LEVEL)
        log_file: File name under logs/; outside debug mode one is always attached

    Returns:
        Configured logger instance
    """
    logger = logging.getLogger(name)
    log_level = get_log_level(level or settings.LOG_LEVEL)
    logger.setLevel(log_level)

    # Loggers are shared by joblib workers in the same process
    if logger.handlers:
        return logger

    logger.addHandler(_handler(logging.StreamHandler(sys.stderr), log_level))

    if log_file or not settings.DEBUG:
        LOG_DIR.mkdir(exist_ok=True)
        file_path = LOG_DIR / (log_file or f"{settings.APP_NAME.lower().replace(' ', '_')}.log")
        logger.addHandler(_handler(logging.FileHandler(file_path, encoding="utf-8"), log_level))

    logger.propagate = False
    return logger


def get_logger(name: str) -> logging.Logger:
    """
    Get a logger instance for a module.

    Example:
        >>> from utils.logger import get_logger
        >>> logger = get_logger(__name__)
        >>> logger.info("Decoding 160 emissions")
    """
    return setup_logger(name)


def log_exception(logger: logging.Logger, exc: Exception, context: str = ""):
    """
    Log an exception with context.

    Data errors describe bad input and are logged without a traceback.

    Args:
        logger: Logger instance
        exc: Exception to log
        context: Prefix naming the failed step
    """
    message = f"{type(exc).__name__}: {exc}"
    if context:
        message = f"{context}: {message}"
    logger.error(message, exc_info=not isinstance(exc, DataError))
