"""Logging utility module."""

import logging
import os
from logging import handlers

LOG_LEVEL = os.getenv("LOG_LEVEL", "WARNING").upper()
LOG_FILE = os.getenv("AFMASS_LOGFILE", "afmass.log")
log = logging.getLogger("afmass")
fmt = logging.Formatter(
    "%(asctime)s - %(name)s - %(levelname)s l:%(lineno)d - f:%(filename)s: %(message)s"
)


def get_logger(logfile: str = LOG_FILE) -> logging.Logger:
    """Returns the package logger, writing to a rotating file.

    A handler is attached once per log file, so modules can call this at
    import time without duplicating records.

    Args:
        logfile (str): Log file name.

    Returns:
        logging.Logger: Logger object.
    """
    target = os.path.abspath(logfile)
    for handler in log.handlers:
        if getattr(handler, "baseFilename", None) == target:
            return log

    fh = handlers.RotatingFileHandler(
        logfile,
        maxBytes=2**20,
        backupCount=10,
        delay=True,
    )
    fh.setLevel(LOG_LEVEL)
    fh.setFormatter(fmt)
    log.setLevel(LOG_LEVEL)
    log.addHandler(fh)
    return log
