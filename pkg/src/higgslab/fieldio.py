"""Field serialization: a JSON header next to a flat little-endian binary body.

``<stem>.json`` describes the grid and layout; ``<stem>.bin`` holds the node
values in row-major order, each complex number stored as two little-endian
float64 values (real, imaginary).
"""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np

from .errors import InvalidInputError
from .geometry import Domain

FORMAT = "higgslab-field"
_DTYPE = np.dtype("<c16")


def _paths(stem):
    stem = Path(stem)
    if stem.suffix in (".json", ".bin"):
        stem = stem.with_suffix("")
    return stem.with_suffix(".json"), stem.with_suffix(".bin")


def write_field(stem, dom, F, meta=None):
    """Write a scalar ``(n_x, n_y)`` or matrix ``(n_x, n_y, r, r)`` field."""
    F = np.asarray(F, dtype=complex)
    if F.shape[:2] != dom.shape or F.ndim not in (2, 4):
        raise InvalidInputError(f"field shape {F.shape} does not fit domain {dom.shape}")
    rank = 0 if F.ndim == 2 else F.shape[-1]
    header = {
        "format": FORMAT,
        "domain": dom.header(),
        "rank": rank,
        "shape": list(F.shape),
        "dtype": "complex128",
        "byteorder": "little",
        "order": "row-major",
    }
    if meta:
        header["meta"] = meta
    jpath, bpath = _paths(stem)
    jpath.parent.mkdir(parents=True, exist_ok=True)
    jpath.write_text(json.dumps(header, indent=2, sort_keys=True) + "\n")
    bpath.write_bytes(np.ascontiguousarray(F, dtype=_DTYPE).tobytes())
    return jpath, bpath


def read_field(stem):
    """Return ``(domain, field, header)``."""
    jpath, bpath = _paths(stem)
    header = json.loads(jpath.read_text())
    if header.get("format") != FORMAT:
        raise InvalidInputError(f"{jpath} is not a {FORMAT} header")
    dom = Domain.from_header(header["domain"])
    shape = tuple(header["shape"])
    data = np.frombuffer(bpath.read_bytes(), dtype=_DTYPE)
    if data.size != int(np.prod(shape)):
        raise InvalidInputError(f"{bpath} holds {data.size} values, header expects {shape}")
    return dom, data.reshape(shape).astype(complex), header
