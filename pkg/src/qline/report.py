"""Deterministic text output: every float at 17 significant digits, keys sorted."""

from __future__ import annotations

import json
import math

import numpy as np


def fmt(x: float) -> str:
    x = float(x)
    if math.isnan(x) or math.isinf(x):
        return json.dumps(str(x))
    return f"{x:.17g}"


def dump_json(obj, indent: int | None = 1, _level: int = 0) -> str:
    """Serialise ``obj`` as JSON; ``indent=None`` gives a single line."""
    if indent is None:
        sep, pad, end, nl = ", ", "", "", ""
    else:
        sep, pad, end, nl = ",\n", " " * (indent * (_level + 1)), " " * (indent * _level), "\n"
    if isinstance(obj, dict):
        if not obj:
            return "{}"
        items = [f"{pad}{json.dumps(str(k))}: {dump_json(v, indent, _level + 1)}" for k, v in sorted(obj.items())]
        return "{" + nl + sep.join(items) + nl + end + "}"
    if isinstance(obj, (list, tuple)):
        if not obj:
            return "[]"
        return "[" + nl + sep.join(pad + dump_json(v, indent, _level + 1) for v in obj) + nl + end + "]"
    if obj is None:
        return "null"
    if isinstance(obj, (bool, np.bool_)):
        return "true" if obj else "false"
    if isinstance(obj, (int, np.integer)):
        return str(int(obj))
    if isinstance(obj, (float, np.floating)):
        return fmt(obj)
    return json.dumps(str(obj))
