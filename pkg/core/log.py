"""
core.log
Rotating file logging for the simulation toolkit.

Modules only call logging.getLogger(__name__); the entry points call
setup_logging() once so every record under the "core" namespace lands in
<LOG_DIR>/socialmwu.log.
"""

from __future__ import annotations

import logging
from logging.handlers import RotatingFileHandler
from pathlib import Path
from typing import Optional

from .config import get_settings

_LOGGER: logging.Logger | None = None


def setup_logging(log_dir: Optional[Path] = None) -> logging.Logger:
    """
    Returns the package logger configured with a rotating file handler.
    The logger is created once (singleton) and reused across calls.
    """
    global _LOGGER
    if _LOGGER is not None:
        return _LOGGER

    settings = get_settings()
    log_dir = Path(log_dir) if log_dir is not None else settings.log_dir
    log_dir.mkdir(parents=True, exist_ok=True)

    logger = logging.getLogger("core")  # keep a stable name for filters
    logger.setLevel(settings.log_level)
    logger.propagate = False  # avoid duplicate logs in root logger

    handler = RotatingFileHandler(
        log_dir / "socialmwu.log",
        maxBytes=1_000_000,
        backupCount=5,
        encoding="utf-8",
    )
    formatter = logging.Formatter(
        fmt="%(asctime)s - %(name)s - %(levelname)s - %(message)s",
        datefmt="%Y-%m-%d %H:%M:%S",
    )
    handler.setFormatter(formatter)

    # Add handler only once
    if not logger.handlers:
        logger.addHandler(handler)

    _LOGGER = logger
    return logger
