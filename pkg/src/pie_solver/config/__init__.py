"""Application settings."""

from pie_solver.config.settings import AppConfig, SolverSettings, app_config, get_solver_settings

__all__ = ["AppConfig", "SolverSettings", "app_config", "get_solver_settings"]
