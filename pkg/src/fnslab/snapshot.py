"""Binary field snapshots.

Format (all little-endian):

    magic   4 bytes  b"FNS1"
    n       u32      points per dimension
    box_len f64
    components u32   1 or 3
    space_flag u32   0 = physical samples, 1 = spectral coefficients

followed by the payload as f64: raw samples for physical fields, interleaved
(re, im) pairs for spectral fields.  Layout is component-major with the x
index varying fastest.
"""

from __future__ import annotations

import struct
from pathlib import Path

import numpy as np

from .spectral import Grid, PhysicalField, SpectralField

MAGIC = b"FNS1"
_HEADER = struct.Struct("<4sIdII")

SPACE_PHYSICAL = 0
SPACE_SPECTRAL = 1


def write_snapshot(path, field) -> None:
    """Write a PhysicalField or SpectralField to `path`."""
    path = Path(path)
    if isinstance(field, PhysicalField):
        space = SPACE_PHYSICAL
        payload = np.concatenate(
            [field.values[c].ravel(order="F") for c in range(field.components)]
        )
    elif isinstance(field, SpectralField):
        space = SPACE_SPECTRAL
        parts = []
        for c in range(field.components):
            flat = field.coeffs[c].ravel(order="F")
            inter = np.empty(2 * flat.size, dtype=np.float64)
            inter[0::2] = flat.real
            inter[1::2] = flat.imag
            parts.append(inter)
        payload = np.concatenate(parts)
    else:
        raise TypeError(f"cannot snapshot object of type {type(field).__name__}")
    header = _HEADER.pack(
        MAGIC, field.grid.n, field.grid.box_len, field.components, space
    )
    with open(path, "wb") as fh:
        fh.write(header)
        fh.write(payload.astype("<f8").tobytes())


def read_snapshot(path):
    """Read a snapshot; returns a PhysicalField or SpectralField."""
    path = Path(path)
    raw = path.read_bytes()
    if len(raw) < _HEADER.size:
        raise ValueError(f"{path}: truncated snapshot header")
    magic, n, box_len, components, space = _HEADER.unpack_from(raw)
    if magic != MAGIC:
        raise ValueError(f"{path}: bad magic {magic!r}, expected {MAGIC!r}")
    if components not in (1, 3):
        raise ValueError(f"{path}: invalid component count {components}")
    grid = Grid(int(n), float(box_len))
    count = n**3
    scale = 2 if space == SPACE_SPECTRAL else 1
    expected = _HEADER.size + 8 * scale * count * components
    if len(raw) != expected:
        raise ValueError(
            f"{path}: payload size mismatch (got {len(raw)} bytes, expected {expected})"
        )
    flat = np.frombuffer(raw, dtype="<f8", offset=_HEADER.size)
    per_comp = scale * count
    if space == SPACE_PHYSICAL:
        comps = [
            flat[c * per_comp : (c + 1) * per_comp].reshape((n, n, n), order="F")
            for c in range(components)
        ]
        return PhysicalField(grid, np.stack(comps))
    if space == SPACE_SPECTRAL:
        comps = []
        for c in range(components):
            chunk = flat[c * per_comp : (c + 1) * per_comp]
            comp = (chunk[0::2] + 1j * chunk[1::2]).reshape((n, n, n), order="F")
            comps.append(comp)
        return SpectralField(grid, np.stack(comps))
    raise ValueError(f"{path}: unknown space flag {space}")
