"""
File handling utilities for saving solver results.
"""

import json
import math
import os
from typing import Any, Dict, Optional

import numpy as np
import pandas as pd

from pie_solver.config.settings import app_config

FLOAT_FORMAT = "%.17g"


def default_output_path(command: str, fmt: str, folder: Optional[str] = None) -> str:
    """
    Default result path for a command.

    Names carry no timestamp so repeated runs overwrite the same file.

    Args:
        command: Command name, e.g. "profile"
        fmt: "csv" or "json"
        folder: Results folder; defaults to PIE_RESULTS_DIR

    Returns:
        str: Path inside the results folder
    """
    folder = folder or app_config.results_dir
    return os.path.join(folder, f"{command}.{fmt}")


def sidecar_path(path: str) -> str:
    """Summary JSON next to a bulk result file: results/solve.csv -> results/solve.summary.json."""
    stem, _ = os.path.splitext(path)
    return f"{stem}.summary.json"


def _ensure_folder(path: str):
    folder = os.path.dirname(path)
    if folder:
        os.makedirs(folder, exist_ok=True)


def to_jsonable(value: Any) -> Any:
    """Convert numpy values, complex numbers and non-finite floats for json.dump."""
    if isinstance(value, dict):
        return {str(k): to_jsonable(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [to_jsonable(v) for v in value]
    if isinstance(value, np.ndarray):
        return [to_jsonable(v) for v in value.tolist()]
    if isinstance(value, (bool, np.bool_)):
        return bool(value)
    if isinstance(value, (int, np.integer)):
        return int(value)
    if isinstance(value, (complex, np.complexfloating)):
        return {"re": to_jsonable(float(value.real)), "im": to_jsonable(float(value.imag))}
    if isinstance(value, (float, np.floating)):
        value = float(value)
        return value if math.isfinite(value) else None
    return value


def dumps_json(data: Any) -> str:
    return json.dumps(to_jsonable(data), indent=2, allow_nan=False)


def save_json(data: Any, path: str) -> str:
    """
    Save a result document as JSON.

    Args:
        data: Result object (dicts, lists, numbers, numpy values)
        path: Destination file

    Returns:
        str: Path to the saved file
    """
    _ensure_folder(path)
    with open(path, "w", encoding="utf-8", newline="\n") as f:
        f.write(dumps_json(data))
        f.write("\n")
    return path


def save_csv(columns: Dict[str, Any], path: str) -> str:
    """
    Save equally long columns as CSV with 17 significant digits per float.

    Args:
        columns: Column name -> values, in output order
        path: Destination file

    Returns:
        str: Path to the saved CSV file
    """
    _ensure_folder(path)
    frame = pd.DataFrame(columns)
    frame.to_csv(path, index=False, float_format=FLOAT_FORMAT, lineterminator="\n", encoding="utf-8")
    return path


def save_table(columns: Dict[str, Any], path: str, fmt: str) -> str:
    """Write a column table in the job's output format (CSV, or JSON of column lists)."""
    if fmt == "json":
        return save_json({name: list(values) for name, values in columns.items()}, path)
    return save_csv(columns, path)
