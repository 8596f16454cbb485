"""
Configuration settings for the partial integral equation solver.
Handles environment-driven defaults for tolerances, grids and logging.
"""

import os
from typing import Callable, Optional, TypeVar

from dotenv import load_dotenv

from pie_solver.errors import ConfigError

# Load environment variables from .env if present so local runs pick them up
load_dotenv()

T = TypeVar("T")


def _read_env(name: str, default: T, cast: Callable[[str], T]) -> T:
    raw = os.environ.get(name)
    if raw is None or raw.strip() == "":
        return default
    try:
        return cast(raw.strip())
    except ValueError as e:
        raise ConfigError(f"environment variable {name}={raw!r} is invalid: {e}") from e


class SolverSettings:
    """Numerical defaults; job configs and command-line flags override them."""

    def __init__(self):
        self.zero_tol = _read_env("PIE_ZERO_TOL", 1e-8, float)
        self.measure_tol = _read_env("PIE_MEASURE_TOL", 0.02, float)
        self.eig_tol = _read_env("PIE_EIG_TOL", 1e-8, float)
        self.degeneracy_tol = _read_env("PIE_DEGENERACY_TOL", 1e-12, float)
        self.nx = _read_env("PIE_NX", 24, int)
        self.ny = _read_env("PIE_NY", 24, int)
        self.y_depth = _read_env("PIE_Y_DEPTH", 6, int)
        self.series_terms = _read_env("PIE_SERIES_TERMS", 200, int)
        self._validate()

    def _validate(self):
        for name in ("zero_tol", "measure_tol", "eig_tol", "degeneracy_tol"):
            if getattr(self, name) <= 0:
                raise ConfigError(f"{name} must be positive")
        if not self.measure_tol < 1:
            raise ConfigError("measure_tol must be below 1")
        if self.nx < 4 or self.ny < 4:
            raise ConfigError("nx and ny must be at least 4")
        if self.y_depth < 0 or self.series_terms < 1:
            raise ConfigError("y_depth must be >= 0 and series_terms >= 1")


class AppConfig:
    """Process-level options for the command-line application."""

    def __init__(self):
        self.log_level = os.environ.get("PIE_LOG_LEVEL", "WARNING").upper()
        self.results_dir = os.environ.get("PIE_RESULTS_DIR", "results")


_solver_settings: Optional[SolverSettings] = None


def get_solver_settings() -> SolverSettings:
    """Return the global settings, reading the environment on first use."""
    global _solver_settings
    if _solver_settings is None:
        _solver_settings = SolverSettings()
    return _solver_settings


def reset_solver_settings():
    """Drop the cached settings so the next call re-reads the environment."""
    global _solver_settings
    _solver_settings = None


# Global configuration instance
app_config = AppConfig()
