import json

import pytest

from pie_solver.config.settings import reset_solver_settings
from pie_solver.quadrature import Domain, gauss_legendre


@pytest.fixture(autouse=True)
def fresh_settings(monkeypatch):
    """Every test starts from default settings, whatever the local .env says."""
    for name in (
        "PIE_ZERO_TOL", "PIE_MEASURE_TOL", "PIE_EIG_TOL", "PIE_DEGENERACY_TOL",
        "PIE_NX", "PIE_NY", "PIE_Y_DEPTH", "PIE_SERIES_TERMS",
    ):
        monkeypatch.delenv(name, raising=False)
    reset_solver_settings()
    yield
    reset_solver_settings()


@pytest.fixture
def unit():
    return Domain(0.0, 1.0)


@pytest.fixture
def rule24(unit):
    return gauss_legendre(24, unit)


@pytest.fixture
def rule12(unit):
    return gauss_legendre(12, unit)


@pytest.fixture
def write_job(tmp_path, monkeypatch):
    """Write a job file into a scratch working directory and return its path."""
    monkeypatch.chdir(tmp_path)

    def _write(data, name="job.json"):
        path = tmp_path / name
        path.write_text(json.dumps(data), encoding="utf-8")
        return str(path)

    return _write
