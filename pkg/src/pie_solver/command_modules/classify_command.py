"""
Classify command: regular, essential or characteristic verdict for kappa.
"""

import logging
from typing import Any, Dict

from pie_solver.job_config import JobConfig
from pie_solver.kernel import check_condition_I, describe
from pie_solver.pie import classify, determinant_profile
from pie_solver.utils.file_utils import default_output_path, save_json

logger = logging.getLogger(__name__)


def run_classify(job: JobConfig) -> Dict[str, Any]:
    """Classify the job's kappa and write the verdict document as JSON."""
    x_rule = job.x_rule()
    profile = determinant_profile(job.kernel, job.kappa, x_rule, job.y_depth, job.zero_tol)
    parameter_class = classify(profile, job.zero_tol, job.measure_tol)
    bound = check_condition_I(job.kernel, x_rule, job.y_rule())

    document = parameter_class.to_dict()
    document["condition_I"] = {"sup_b": bound.sup_b}
    document["kappa"] = job.kappa
    document["kernel"] = describe(job.kernel)

    path = job.output_path or default_output_path("classify", "json")
    save_json(document, path)
    logger.info("classification written to %s", path)
    return document
