"""JSON report writer with fixed 17-significant-digit floats."""

from __future__ import annotations

import json
import math
from pathlib import Path

import numpy as np

REPORT_KEYS = ("constants", "verdicts", "convergence", "residuals", "solution_files", "meta")


def _fmt_float(v: float) -> str:
    if math.isnan(v) or math.isinf(v):
        return "null"
    return f"{v:.17g}"


def dumps(obj, indent: int = 2, _level: int = 0) -> str:
    """Serialise ``obj`` like json.dumps but with every float at 17 digits."""
    pad = " " * (indent * (_level + 1))
    end = " " * (indent * _level)
    if obj is None:
        return "null"
    if isinstance(obj, (bool, np.bool_)):
        return "true" if obj else "false"
    if isinstance(obj, (int, np.integer)):
        return str(int(obj))
    if isinstance(obj, (float, np.floating)):
        return _fmt_float(float(obj))
    if isinstance(obj, str):
        return json.dumps(obj)
    if isinstance(obj, dict):
        if not obj:
            return "{}"
        items = [f"{pad}{dumps(str(k))}: {dumps(v, indent, _level + 1)}" for k, v in obj.items()]
        return "{\n" + ",\n".join(items) + "\n" + end + "}"
    if isinstance(obj, (list, tuple, np.ndarray)):
        if len(obj) == 0:
            return "[]"
        items = [f"{pad}{dumps(v, indent, _level + 1)}" for v in obj]
        return "[\n" + ",\n".join(items) + "\n" + end + "]"
    raise TypeError(f"cannot serialise {type(obj).__name__}")


def new_report() -> dict:
    return {key: {} for key in REPORT_KEYS}


def write_report(report: dict, path) -> None:
    Path(path).write_text(dumps(report) + "\n")


def strip_volatile(report: dict) -> dict:
    """Copy of a loaded report without the timestamp, for comparisons."""
    out = dict(report)
    out["meta"] = {k: v for k, v in report.get("meta", {}).items() if k != "generated_at"}
    return out
