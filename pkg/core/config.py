#%%

from dataclasses import dataclass
from pathlib import Path
import logging
logger = logging.getLogger(__name__)
import os
from typing import Optional # For type hinting optional values
from functools import lru_cache # For caching function results


#This module handles process-level settings (log folder, log level,
#default worker count), loading them from environment variables
#(with optional .env support), validating them, and providing a
#typed interface for access. Experiment files live in experiment_config.



#The Settings dataclass holds all process settings

@dataclass(frozen=True) #imutable
class Settings:
    LOG_DIR: Path
    LOG_LEVEL: str = "INFO"
    WORKERS: int = 1

    @property
    def log_dir(self) -> Path:
        return self.LOG_DIR

    @property
    def log_level(self) -> str:
        return self.LOG_LEVEL

    @property
    def workers(self) -> int:
        return self.WORKERS



def _load_env_if_present() -> None:
    try:
        from dotenv import load_dotenv
        load_dotenv()
    except ImportError:
        logger.warning("Python-dotenv not installed; passing .env loading.")

def _read_env_raw() -> dict[str, str]:
    """Reads environment variables already with .env applied and returns raw values (strings)."""

    _load_env_if_present() #trying env

    return {
        "LOG_DIR": os.environ.get("LOG_DIR", ""),
        "LOG_LEVEL": os.environ.get("LOG_LEVEL", ""),
        "WORKERS": os.environ.get("WORKERS", ""),
    }

def _build_settings(env: dict[str, str]) -> Settings:
    """
    Builds the Settings dataclass instance from raw environment variables.
    Performs normalization and validation of each setting.
    """
    # Log directory: if not provided, create a sensible default (~/.socialmwu/logs)
    raw_log_dir = (env.get("LOG_DIR") or "").strip()
    if raw_log_dir:
        log_dir = Path(raw_log_dir).expanduser().resolve()
    else:
        log_dir = Path.home() / ".socialmwu" / "logs"
    log_dir.mkdir(parents=True, exist_ok=True)

    log_level = (env.get("LOG_LEVEL") or "INFO").strip().upper()

    raw_workers = (env.get("WORKERS") or "1").strip()
    try:
        workers = int(raw_workers)
    except ValueError as e:
        raise ValueError(f"WORKERS must be an integer. Got {raw_workers!r}") from e

    settings = Settings(LOG_DIR=log_dir, LOG_LEVEL=log_level, WORKERS=workers)
    _validate_required(settings)
    return settings

@lru_cache(maxsize=1) # Cache the settings after first load

def get_settings() -> Settings:
    """
    Public function to get the process settings.
    Returns a Settings dataclass instance with all configuration values.
    """
    env = _read_env_raw()
    return _build_settings(env)

def refresh_settings() -> None:
    """
    Clears the cached settings, forcing a reload on next get_settings() call.
    """
    get_settings.cache_clear()




def get_log_dir() -> Path:
    """
    Returns log folder
    """
    return get_settings().log_dir



def _validate_required(settings: Settings) -> None:
    if settings.workers < 1:
        raise ValueError(f"WORKERS must be >= 1. Got {settings.workers}.")
    if settings.log_level not in ("DEBUG", "INFO", "WARNING", "ERROR", "CRITICAL"):
        raise ValueError(
            f"LOG_LEVEL {settings.log_level!r} is not a logging level name."
        )
