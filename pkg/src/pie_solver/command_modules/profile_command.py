"""
Profile command: samples of the determinant D1(y; kappa).
"""

import logging
from typing import Any, Dict

import numpy as np

from pie_solver.fredholm import assemble_slice, determinant_direct
from pie_solver.job_config import JobConfig
from pie_solver.quadrature import uniform_grid
from pie_solver.utils.file_utils import default_output_path, save_table

logger = logging.getLogger(__name__)


def run_profile(job: JobConfig) -> Dict[str, Any]:
    """
    Write D1(y; kappa) at ny equally spaced y (endpoints included).

    Columns: y, re_D1, im_D1, abs_D1.

    Returns:
        dict: stdout summary
    """
    x_rule = job.x_rule()
    y = uniform_grid(job.kernel.domain, job.ny - 1)
    values = np.array([determinant_direct(assemble_slice(job.kernel, x_rule, t), job.kappa).value for t in y])

    path = job.output_path or default_output_path("profile", job.output_format)
    save_table(
        {"y": y, "re_D1": values.real, "im_D1": values.imag, "abs_D1": np.abs(values)},
        path,
        job.output_format,
    )
    at_min = int(np.argmin(np.abs(values)))
    logger.info("profile written to %s", path)
    return {
        "command": "profile",
        "path": path,
        "rows": int(y.size),
        "kappa": job.kappa,
        "min_abs_D1": float(np.abs(values[at_min])),
        "argmin_y": float(y[at_min]),
    }
