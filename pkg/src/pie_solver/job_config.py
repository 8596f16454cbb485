"""
Job configuration for the command-line application.

A job is one JSON document::

    {
      "kernel": {"type": "builtin", "name": "example2"},
      "rhs": "exp(x)*y^0.5",
      "kappa": {"re": 0.5, "im": 0},
      "discretization": {"nx": 24, "ny": 24, "y_depth": 6},
      "tolerances": {"zero_tol": 1e-8, "measure_tol": 0.02, "eig_tol": 1e-8},
      "output": {"path": "results/solve.csv", "format": "csv"}
    }

Only "kernel" is required. Missing values fall back to the solver settings;
command-line flags override the file.
"""

import json
import logging
import math
from dataclasses import dataclass, replace
from typing import Any, Mapping, Optional

from pie_solver.config.settings import get_solver_settings
from pie_solver.errors import ConfigError, ExpressionSyntaxError, PieError
from pie_solver.kernel import Kernel, RightHandSide, kernel_from_config, rhs_from_expression
from pie_solver.quadrature import QuadratureRule, gauss_legendre

logger = logging.getLogger(__name__)

OUTPUT_FORMATS = ("csv", "json")


def parse_kappa(value: Any) -> complex:
    """
    Read kappa as a number, {"re": ..., "im": ...} or a complex literal like "0.3+0.4j".

    Raises:
        ConfigError: Value is none of these or not finite
    """
    try:
        if isinstance(value, bool):
            raise TypeError("booleans are not numbers")
        if isinstance(value, (int, float)):
            kappa = complex(value)
        elif isinstance(value, Mapping):
            unknown = set(value) - {"re", "im"}
            if unknown:
                raise ValueError(f"unexpected keys {sorted(unknown)}")
            kappa = complex(float(value.get("re", 0.0)), float(value.get("im", 0.0)))
        elif isinstance(value, str):
            kappa = complex(value.strip().replace(" ", ""))
        else:
            raise TypeError(f"unsupported type {type(value).__name__}")
    except (TypeError, ValueError) as e:
        raise ConfigError(f"kappa must be a number, {{re, im}} or a complex literal: {e}") from e
    if not (math.isfinite(kappa.real) and math.isfinite(kappa.imag)):
        raise ConfigError(f"kappa must be finite, got {kappa}")
    return kappa


@dataclass(frozen=True)
class JobConfig:
    kernel: Kernel
    kappa: complex
    nx: int
    ny: int
    y_depth: int
    zero_tol: float
    measure_tol: float
    eig_tol: float
    rhs: Optional[RightHandSide] = None
    output_path: Optional[str] = None
    output_format: str = "csv"

    def with_overrides(self, kappa: Any = None, nx: Optional[int] = None, ny: Optional[int] = None) -> "JobConfig":
        """Apply command-line overrides on top of the file values."""
        updated = replace(
            self,
            kappa=self.kappa if kappa is None else parse_kappa(kappa),
            nx=self.nx if nx is None else nx,
            ny=self.ny if ny is None else ny,
        )
        updated.validate()
        return updated

    def x_rule(self) -> QuadratureRule:
        return gauss_legendre(self.nx, self.kernel.domain)

    def y_rule(self) -> QuadratureRule:
        return gauss_legendre(self.ny, self.kernel.domain)

    def validate(self):
        if self.nx < 4 or self.ny < 4:
            raise ConfigError(f"nx and ny must be at least 4, got nx={self.nx}, ny={self.ny}")
        if self.y_depth < 0:
            raise ConfigError(f"y_depth must be non-negative, got {self.y_depth}")
        for name in ("zero_tol", "measure_tol", "eig_tol"):
            value = getattr(self, name)
            if not (0 < value < 1):
                raise ConfigError(f"{name} must lie in (0, 1), got {value}")
        if self.output_format not in OUTPUT_FORMATS:
            raise ConfigError(f"output format must be one of {OUTPUT_FORMATS}, got {self.output_format!r}")


def _section(data: Mapping[str, Any], name: str) -> Mapping[str, Any]:
    value = data.get(name, {})
    if not isinstance(value, Mapping):
        raise ConfigError(f"'{name}' must be a JSON object")
    return value


def _integer(section: Mapping[str, Any], key: str, default: int) -> int:
    value = section.get(key, default)
    if isinstance(value, bool) or not isinstance(value, int):
        raise ConfigError(f"'{key}' must be an integer, got {value!r}")
    return value


def _real(section: Mapping[str, Any], key: str, default: float) -> float:
    value = section.get(key, default)
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ConfigError(f"'{key}' must be a number, got {value!r}")
    return float(value)


def job_config_from_dict(data: Mapping[str, Any]) -> JobConfig:
    """
    Build a JobConfig from parsed JSON.

    Raises:
        ConfigError: Schema violation
        ExpressionSyntaxError: Kernel or rhs expression does not parse
    """
    if not isinstance(data, Mapping):
        raise ConfigError("job config must be a JSON object")
    if "kernel" not in data:
        raise ConfigError("job config needs a 'kernel' object")
    settings = get_solver_settings()

    kernel = kernel_from_config(data["kernel"])
    rhs = None
    if data.get("rhs") is not None:
        if not isinstance(data["rhs"], str):
            raise ConfigError("'rhs' must be an expression string in x and y")
        try:
            rhs = rhs_from_expression(data["rhs"], kernel.domain)
        except ExpressionSyntaxError:
            raise
        except PieError as e:
            raise ConfigError(str(e)) from e

    discretization = _section(data, "discretization")
    tolerances = _section(data, "tolerances")
    output = _section(data, "output")
    path = output.get("path")
    if path is not None and not isinstance(path, str):
        raise ConfigError("output 'path' must be a string")

    config = JobConfig(
        kernel=kernel,
        kappa=parse_kappa(data.get("kappa", 0.0)),
        nx=_integer(discretization, "nx", settings.nx),
        ny=_integer(discretization, "ny", settings.ny),
        y_depth=_integer(discretization, "y_depth", settings.y_depth),
        zero_tol=_real(tolerances, "zero_tol", settings.zero_tol),
        measure_tol=_real(tolerances, "measure_tol", settings.measure_tol),
        eig_tol=_real(tolerances, "eig_tol", settings.eig_tol),
        rhs=rhs,
        output_path=path,
        output_format=str(output.get("format", "csv")),
    )
    config.validate()
    logger.debug("loaded job: kernel=%s kappa=%s nx=%d ny=%d", kernel.label, config.kappa, config.nx, config.ny)
    return config


def load_job_config(path: str) -> JobConfig:
    """Read and validate a job file."""
    try:
        with open(path, "r", encoding="utf-8") as f:
            data = json.load(f)
    except OSError as e:
        raise ConfigError(f"cannot read job config {path!r}: {e}") from e
    except json.JSONDecodeError as e:
        raise ConfigError(f"job config {path!r} is not valid JSON: {e}") from e
    return job_config_from_dict(data)
