"""Logging setup for the lab."""

from __future__ import annotations

import logging
import os
import sys
from logging.handlers import RotatingFileHandler

from pythonjsonlogger import jsonlogger

from src.config import config


LOG_FORMAT = "%(asctime)s | %(levelname)s | %(name)s | %(message)s"
JSON_LOG_FORMAT = "%(asctime)s %(levelname)s %(name)s %(message)s"


def setup_logging(*, debug: bool = False, log_file: str | None = None) -> None:
    """Configure Python logging.

    - Console output at INFO+ (or DEBUG+ when debug=True) for run progress.
    - Rotating file output at DEBUG+ for solver diagnostics, as JSON records
      when LOG_JSON is set.
    """

    log_path = log_file or config.LOG_FILE_PATH
    log_dir = os.path.dirname(log_path)
    if log_dir:
        os.makedirs(log_dir, exist_ok=True)

    root_logger = logging.getLogger()
    root_logger.setLevel(logging.DEBUG)

    console_handler = logging.StreamHandler(sys.stdout)
    console_handler.setLevel(logging.DEBUG if debug else logging.INFO)
    console_handler.setFormatter(logging.Formatter(LOG_FORMAT))

    file_handler = RotatingFileHandler(log_path, maxBytes=2_000_000, backupCount=5)
    file_handler.setLevel(logging.DEBUG)
    if config.LOG_JSON:
        file_handler.setFormatter(jsonlogger.JsonFormatter(JSON_LOG_FORMAT))
    else:
        file_handler.setFormatter(logging.Formatter(LOG_FORMAT))

    # Avoid duplicate handlers when the CLI is invoked repeatedly in-process.
    root_logger.handlers.clear()
    root_logger.addHandler(console_handler)
    root_logger.addHandler(file_handler)

    # matplotlib chatters at DEBUG
    logging.getLogger("matplotlib").setLevel(logging.WARNING)


logger = logging.getLogger(__name__)
