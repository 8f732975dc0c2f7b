"""CSV/JSON writers with 17-significant-digit floats and a provenance header."""

from __future__ import annotations

import io
import json
import math
from typing import Iterable, Sequence

import numpy as np


def fmt(x) -> str:
    """Round-trippable decimal for a double; integers stay integers."""
    if isinstance(x, (bool, np.bool_)):
        return str(int(x))
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    return format(float(x), ".17g")


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _jsonable(obj.tolist())
    if isinstance(obj, (np.bool_, bool)):
        return bool(obj)
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        x = float(obj)
        # JSON has no inf/nan; keep them as strings rather than emit invalid JSON
        return x if math.isfinite(x) else repr(x)
    return obj


def csv_text(header: Sequence[str], rows: Iterable[Sequence], config: dict | None = None) -> str:
    buf = io.StringIO()
    if config is not None:
        buf.write("# config: " + json.dumps(_jsonable(config), sort_keys=True) + "\n")
    buf.write(",".join(header) + "\n")
    for row in rows:
        buf.write(",".join(fmt(v) for v in row) + "\n")
    return buf.getvalue()


def json_text(payload: dict, config: dict | None = None) -> str:
    body = dict(payload)
    if config is not None:
        body["config"] = config
    return json.dumps(_jsonable(body), sort_keys=True, indent=1) + "\n"


def read_csv(text: str) -> tuple[list[str], np.ndarray]:
    """Parse a CSV written by :func:`csv_text`, skipping ``#`` comment lines."""
    lines = [ln for ln in text.splitlines() if ln.strip() and not ln.startswith("#")]
    if not lines:
        return [], np.empty((0, 0))
    header = lines[0].split(",")
    data = np.array([[float(v) for v in ln.split(",")] for ln in lines[1:]], dtype=float)
    return header, data.reshape(-1, len(header))
