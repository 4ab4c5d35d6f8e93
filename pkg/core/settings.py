"""
Process-level settings read from the environment (optionally from a .env file).

Values are read on every call so tests and long-running sessions can change them.
"""

import os

from dotenv import load_dotenv

# Load environment variables from .env file
load_dotenv()

DEFAULT_PATCH_CAP = 5_000_000
DEFAULT_WORKERS = 1
DEFAULT_LOG_LEVEL = "INFO"
DEFAULT_OUT_DIR = "out"


def _int_env(name: str, default: int) -> int:
    raw = os.getenv(name)
    if raw is None or not raw.strip():
        return default
    try:
        value = int(raw)
    except ValueError:
        raise ValueError(f"{name} must be an integer, got {raw!r}") from None
    if value < 1:
        raise ValueError(f"{name} must be positive, got {value}")
    return value


def patch_cap() -> int:
    """Maximum number of vertices a generated patch may hold."""
    return _int_env("HYPERPERC_PATCH_CAP", DEFAULT_PATCH_CAP)


def default_workers() -> int:
    return _int_env("HYPERPERC_WORKERS", DEFAULT_WORKERS)


def log_level() -> str:
    return os.getenv("HYPERPERC_LOG_LEVEL", DEFAULT_LOG_LEVEL).upper()


def default_out_dir() -> str:
    return os.getenv("HYPERPERC_OUT_DIR", DEFAULT_OUT_DIR)
