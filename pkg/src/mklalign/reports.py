"""Report plumbing: schema version and JSON-ready conversion."""

from __future__ import annotations

import dataclasses

import numpy as np

SPEC_VERSION = "1.0"


def jsonable(obj):
    """Recursively convert dataclasses, arrays, and numpy scalars to
    plain JSON-serializable Python values."""
    if dataclasses.is_dataclass(obj) and not isinstance(obj, type):
        return {
            f.name: jsonable(getattr(obj, f.name))
            for f in dataclasses.fields(obj)
        }
    if isinstance(obj, dict):
        return {str(k): jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [jsonable(v) for v in obj.tolist()]
    if isinstance(obj, (np.floating, np.integer, np.bool_)):
        return obj.item()
    return obj
