"""
Logging configuration module for Virtual Qubit Machines.
Sets up file logging with rotation plus a console handler on stderr, so that
result tables written to stdout stay clean.
"""
import logging
import sys
from logging.handlers import RotatingFileHandler
from typing import Optional

from config import LOG_DIR, LOG_FILE, LOG_MAX_BYTES, LOG_BACKUP_COUNT, LOG_TO_FILE

# marks handlers installed here so a second call only replaces its own
_HANDLER_TAG = "_vqm_handler"


def setup_logging(log_level: int = logging.INFO, log_to_file: Optional[bool] = None) -> logging.Logger:
    """
    Set up logging configuration.

    Args:
        log_level: Logging level (default: INFO)
        log_to_file: Write the rotating log file (default: config.LOG_TO_FILE)

    Returns:
        logging.Logger: Configured root logger
    """
    if log_to_file is None:
        log_to_file = LOG_TO_FILE

    detailed_formatter = logging.Formatter(
        '%(asctime)s - %(name)s - %(levelname)s - %(funcName)s:%(lineno)d - %(message)s',
        datefmt='%Y-%m-%d %H:%M:%S'
    )

    simple_formatter = logging.Formatter(
        '%(asctime)s - %(levelname)s - %(message)s',
        datefmt='%Y-%m-%d %H:%M:%S'
    )

    root_logger = logging.getLogger()
    root_logger.setLevel(log_level)

    for handler in list(root_logger.handlers):
        if getattr(handler, _HANDLER_TAG, False):
            root_logger.removeHandler(handler)
            handler.close()

    if log_to_file:
        LOG_DIR.mkdir(parents=True, exist_ok=True)
        file_handler = RotatingFileHandler(
            LOG_FILE,
            maxBytes=LOG_MAX_BYTES,
            backupCount=LOG_BACKUP_COUNT,
            encoding='utf-8'
        )
        file_handler.setLevel(log_level)
        file_handler.setFormatter(detailed_formatter)
        setattr(file_handler, _HANDLER_TAG, True)
        root_logger.addHandler(file_handler)

    console_handler = logging.StreamHandler(sys.stderr)
    console_handler.setLevel(log_level)
    console_handler.setFormatter(simple_formatter)
    setattr(console_handler, _HANDLER_TAG, True)
    root_logger.addHandler(console_handler)

    # Suppress noisy third-party loggers
    logging.getLogger('concurrent.futures').setLevel(logging.WARNING)
    logging.getLogger('asyncio').setLevel(logging.WARNING)

    root_logger.debug("=" * 60)
    root_logger.debug("Virtual Qubit Machines - Logging initialized")
    if log_to_file:
        root_logger.debug(f"Log file: {LOG_FILE}")
    root_logger.debug(f"Log level: {logging.getLevelName(log_level)}")
    root_logger.debug("=" * 60)

    return root_logger


def get_logger(name: str) -> logging.Logger:
    """
    Get a logger instance for a module.

    Args:
        name: Logger name (usually __name__)

    Returns:
        logging.Logger: Logger instance
    """
    return logging.getLogger(name)
