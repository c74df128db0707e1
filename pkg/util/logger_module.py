import logging
import os
import sys
import traceback
from datetime import datetime
from pathlib import Path

from config import LOG_FILE_FORMAT, LOG_FORMAT, LOG_TIMESTAMP_ENV_VAR, LOGS_DIR, PROJECT_NAME, TIMESTAMP_FORMAT


class ColoredFormatter(logging.Formatter):
    """Log formatter that colours each line by level with ANSI codes"""

    COLORS = {
        'DEBUG': '\033[90m',      # grey
        'INFO': '\033[92m',       # green
        'WARNING': '\033[93m',    # yellow
        'ERROR': '\033[91m',      # red
        'CRITICAL': '\033[1;91m'  # bold red
    }
    RESET = '\033[0m'

    def format(self, record):
        return f"{self.COLORS.get(record.levelname, '')}{super().format(record)}{self.RESET}"


# One timestamp per session; worker processes inherit it through the environment
_LOG_TIMESTAMP = os.environ.get(LOG_TIMESTAMP_ENV_VAR, datetime.now().strftime(TIMESTAMP_FORMAT))


def setup_logger():
    """Create the process logger, or reuse it when already configured

    Only the console handler is installed here so that importing the library has no
    file-system side effects. Call attach_file_handler() to also write a log file.

    Returns:
        logging.Logger: Configured logger instance
    """
    logger = logging.getLogger(PROJECT_NAME)

    if logger.handlers:
        return logger

    logger.setLevel(logging.DEBUG)
    logger.propagate = False

    ch = logging.StreamHandler(sys.stdout)
    ch.setFormatter(ColoredFormatter(LOG_FORMAT))
    logger.addHandler(ch)

    return logger


def attach_file_handler(save_folder=None, log_filename=None):
    """Write the log of this session to a file as well

    Args:
        save_folder: Folder for the log file. Defaults to 'logs'
        log_filename: File name. Defaults to '{timestamp}.log'

    Returns:
        str: Absolute path of the log file
    """
    if save_folder is None:
        save_folder = LOGS_DIR
    if log_filename is None:
        log_filename = LOG_FILE_FORMAT.format(timestamp=_LOG_TIMESTAMP)

    log_file = Path(save_folder) / log_filename
    resolved = str(log_file.resolve())
    for handler in logger.handlers:
        if isinstance(handler, logging.FileHandler) and handler.baseFilename == resolved:
            return resolved

    os.makedirs(save_folder, exist_ok=True)
    fh = logging.FileHandler(log_file, encoding='utf-8')
    # plain text in files, no colour codes
    fh.setFormatter(logging.Formatter(LOG_FORMAT))
    logger.addHandler(fh)
    return resolved


logger = setup_logger()

os.environ[LOG_TIMESTAMP_ENV_VAR] = _LOG_TIMESTAMP


def log_empty_line():
    """Blank line between scenarios of an experiment"""
    logger.info("")


def log_separator(width=70, char="="):
    """Banner line around experiment steps

    Args:
        width: Number of characters (default: 70)
        char: Banner character (default: "=")
    """
    logger.info(char * width)


def log_exception(context="Operation", error=None, level="error"):
    """Log a failure with its type, and the traceback at DEBUG

    Args:
        context: What was being done, e.g. "Writing experiment outputs"
        error: The exception, when there is one
        level: "error" or "warning" (default: "error")

    Example:
        try:
            run_experiment(scenarios, out_dir)
        except OSError as e:
            log_exception("Writing experiment outputs", e)
    """
    if error is not None:
        emit = logger.warning if level == "warning" else logger.error
        emit(f"[ERROR] {context} failed ({type(error).__name__}): {error}")
    logger.debug(traceback.format_exc())
