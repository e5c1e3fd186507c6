# src/utils/config.py

"""
Runtime settings loaded from the environment (and an optional `.env` file).

### Variables:
- `FBDF_OUT_DIR`: default directory for CSV/JSON artifacts (`output`).
- `FBDF_JOBS`: worker count for sweeps (`1`).
- `FBDF_LOG_DIR`: directory of `main.log` (`logs`).
- `FBDF_MAX_STEPS`: largest weight table a run may allocate (`2000000`).

Command-line flags override these values.
"""

import os
from dataclasses import dataclass
from pathlib import Path

from dotenv import load_dotenv

load_dotenv()

DEFAULT_OUT_DIR = "output"
DEFAULT_LOG_DIR = "logs"
DEFAULT_JOBS = 1
DEFAULT_MAX_STEPS = 2_000_000


@dataclass(frozen=True)
class Settings:
    out_dir: Path
    log_dir: Path
    jobs: int
    max_steps: int


def _int_from_env(name, default):
    raw = os.getenv(name)
    if raw is None or raw.strip() == "":
        return default
    try:
        value = int(raw)
    except ValueError:
        raise ValueError(f"❌ {name} must be an integer, got {raw!r}")
    if value < 1:
        raise ValueError(f"❌ {name} must be positive, got {value}")
    return value


def get_settings():
    """
    Read the current settings from the environment.

    Returns:
        Settings: resolved output/log directories, job count and step budget.
    """
    return Settings(
        out_dir=Path(os.getenv("FBDF_OUT_DIR", DEFAULT_OUT_DIR)),
        log_dir=Path(os.getenv("FBDF_LOG_DIR", DEFAULT_LOG_DIR)),
        jobs=_int_from_env("FBDF_JOBS", DEFAULT_JOBS),
        max_steps=_int_from_env("FBDF_MAX_STEPS", DEFAULT_MAX_STEPS),
    )
