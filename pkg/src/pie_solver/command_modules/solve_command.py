"""
Solve command: grid solution of f - kappa T1 f = g.
"""

import logging
from typing import Any, Dict

import numpy as np

from pie_solver.errors import ConditionIIDivergentError, ConfigError
from pie_solver.job_config import JobConfig
from pie_solver.pie import solve
from pie_solver.utils.file_utils import default_output_path, save_json, save_table, sidecar_path

logger = logging.getLogger(__name__)


def run_solve(job: JobConfig) -> Dict[str, Any]:
    """
    Solve on the nx x ny Gauss grid.

    The grid goes to the output file (columns x, y, re_f, im_f, x-major);
    residual, verdict and condition (II) evidence go to a JSON sidecar.
    """
    if job.rhs is None:
        raise ConfigError("solve needs an 'rhs' expression in the job config")
    path = job.output_path or default_output_path("solve", job.output_format)
    summary_path = sidecar_path(path)

    try:
        solution = solve(
            job.kernel, job.rhs, job.kappa, job.x_rule(), job.y_rule(),
            y_depth=job.y_depth, zero_tol=job.zero_tol, measure_tol=job.measure_tol,
        )
    except ConditionIIDivergentError as e:
        save_json(
            {
                "residual_max": None,
                "verdict": e.parameter_class.verdict.value if e.parameter_class else None,
                "condition_II": e.report.to_dict() if e.report else None,
                "error": str(e),
            },
            summary_path,
        )
        raise

    x_grid, y_grid = np.meshgrid(solution.x_nodes, solution.y_nodes, indexing="ij")
    f = solution.f_values
    save_table(
        {
            "x": x_grid.ravel(),
            "y": y_grid.ravel(),
            "re_f": f.real.ravel(),
            "im_f": f.imag.ravel(),
        },
        path,
        job.output_format,
    )
    summary = {
        "residual_max": solution.residual_max,
        "verdict": solution.class_used.verdict.value,
        "condition_II": solution.condition_II.to_dict() if solution.condition_II else None,
        "excluded_y": [float(solution.y_nodes[j]) for j in solution.excluded],
    }
    save_json(summary, summary_path)
    logger.info("solution written to %s, summary to %s", path, summary_path)
    return {"command": "solve", "path": path, "summary_path": summary_path, **summary}
