"""
Eigen command: eigenvalue curves of the slices and eigenvalues of T1.
"""

import logging
from typing import Any, Dict

from pie_solver.job_config import JobConfig
from pie_solver.pie import detect_eigenvalues
from pie_solver.utils.file_utils import default_output_path, save_json

logger = logging.getLogger(__name__)


def run_eigen(job: JobConfig) -> Dict[str, Any]:
    """Write per-y leading eigenvalues and the detected eigenvalues of T1."""
    report = detect_eigenvalues(
        job.kernel, job.x_rule(), job.y_depth, job.eig_tol, job.measure_tol, job.zero_tol
    )
    detected = [{"lambda": d.value, "support": list(d.support)} for d in report.detected]
    document = {
        "curves": [
            {"y": float(y), "values": list(values)} for y, values in zip(report.y_nodes, report.curves)
        ],
        "detected": detected,
    }
    path = job.output_path or default_output_path("eigen", "json")
    save_json(document, path)
    logger.info("eigenvalue report written to %s", path)
    return {"command": "eigen", "path": path, "detected": detected}
