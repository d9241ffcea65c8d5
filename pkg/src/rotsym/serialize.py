"""Deterministic CSV/JSON writers.

Every experiment artifact must be bit-identical across reruns with the same
manifest, so floats are written with ``repr`` (shortest round-trip form) and
dictionaries are dumped with sorted keys.
"""

import csv
import json
import io
import numbers


def fmt(value):
    """Format one cell deterministically."""
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, numbers.Integral):
        return str(int(value))
    if isinstance(value, numbers.Real):
        return repr(float(value))
    return str(value)


def write_csv(path, header, rows):
    """Write rows (iterables of cells) under a header line."""
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([fmt(c) for c in row])
    with open(path, "w", newline="") as fh:
        fh.write(buf.getvalue())


def read_csv(path):
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    return rows[0], rows[1:]


def write_json(path, obj):
    with open(path, "w") as fh:
        json.dump(obj, fh, indent=2, sort_keys=True, default=_coerce)
        fh.write("\n")


def read_json(path):
    with open(path) as fh:
        return json.load(fh)


def _coerce(obj):
    try:
        import numpy as np
    except ImportError:  # pragma: no cover
        raise TypeError(f"not JSON serializable: {obj!r}")
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    if isinstance(obj, np.generic):
        return obj.item()
    raise TypeError(f"not JSON serializable: {obj!r}")
