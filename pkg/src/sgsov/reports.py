"""Deterministic JSON and CSV output."""

import csv
import io
import json
import math
from pathlib import Path

import numpy as np

SCHEMA = "sgsov-report/v1"


def _num(x):
    if math.isnan(x):
        return '"nan"'
    if math.isinf(x):
        return '"inf"' if x > 0 else '"-inf"'
    text = format(x, ".17g")
    # keep floats recognisable as floats
    if all(ch not in text for ch in ".eE"):
        text += ".0"
    return text


def canonical_json(obj, indent=2, _level=0):
    """Sorted keys, 17 significant digits, no locale or time dependence."""
    pad = " " * (indent * (_level + 1))
    end = " " * (indent * _level)
    if obj is None or isinstance(obj, (bool, np.bool_)):
        return json.dumps(None if obj is None else bool(obj))
    if isinstance(obj, (int, np.integer)):
        return str(int(obj))
    if isinstance(obj, (float, np.floating)):
        return _num(float(obj))
    if isinstance(obj, (complex, np.complexfloating)):
        return canonical_json([obj.real, obj.imag], indent, _level)
    if isinstance(obj, str):
        return json.dumps(obj)
    if isinstance(obj, dict):
        if not obj:
            return "{}"
        items = [f"{pad}{json.dumps(str(k))}: {canonical_json(obj[k], indent, _level + 1)}"
                 for k in sorted(obj, key=str)]
        return "{\n" + ",\n".join(items) + "\n" + end + "}"
    if isinstance(obj, (list, tuple, np.ndarray)):
        seq = list(obj)
        if not seq:
            return "[]"
        items = [pad + canonical_json(v, indent, _level + 1) for v in seq]
        return "[\n" + ",\n".join(items) + "\n" + end + "]"
    to_json = getattr(obj, "to_json", None)
    if to_json is not None:
        return canonical_json(to_json(), indent, _level)
    raise TypeError(f"cannot serialise {type(obj).__name__}")


def envelope(kind, config, results):
    return {"schema": SCHEMA, "kind": kind, "config": config, "results": results}


def to_csv(rows):
    """CSV text for a list of flat dicts; columns in first-seen order."""
    if not rows:
        return ""
    cols = []
    for r in rows:
        for k in r:
            if k not in cols:
                cols.append(k)
    buf = io.StringIO()
    w = csv.DictWriter(buf, fieldnames=cols, lineterminator="\n")
    w.writeheader()
    for r in rows:
        w.writerow({k: _cell(r.get(k)) for k in cols})
    return buf.getvalue()


def _cell(v):
    if v is None:
        return ""
    if isinstance(v, (float, np.floating)):
        return format(float(v), ".17g")
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    return v


def emit_report(doc, path=None, fmt="json", rows=None):
    """Write ``doc`` (JSON) or ``rows`` (CSV) to ``path``, or return the text if no path."""
    if fmt == "json":
        text = canonical_json(doc) + "\n"
    elif fmt == "csv":
        text = to_csv(rows if rows is not None else [])
    else:
        raise ValueError(f"unknown format {fmt!r}")
    if path is None:
        return text
    Path(path).write_text(text)
    return text
