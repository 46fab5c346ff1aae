"""Bit-exact serialization of site grids (final states, odometers).

Binary layout, little-endian:
  magic "TSPL" | version u16 | scale i32 | nverts u16 | verts (i32 pairs)
  | dtype code u8 (1 = uint8, 8 = int64) | y_min i32 | nrows i32
  | per row: x_lo i32, x_hi i32 | payload values row by row.

CSV interchange is plain ``x,y,value`` lines with a header.
"""

from __future__ import annotations

import struct

import numpy as np

from .lattice import build_domain, validate_polygon

MAGIC = b"TSPL"
VERSION = 1


class GridFormatError(ValueError):
    pass


_DTYPES = {1: np.uint8, 8: np.int64}
_CODES = {np.dtype(np.uint8): 1, np.dtype(np.int64): 8}


def write_grid(path, domain, values, dtype=None):
    """Write per-site values (dense bounding-box array) for a domain."""
    arr = np.asarray(values)
    if dtype is not None:
        arr = arr.astype(dtype)
    if arr.dtype not in _CODES:
        arr = arr.astype(np.int64)
    code = _CODES[arr.dtype]
    poly = domain.polygon
    x0, y0 = domain.grid_origin()
    with open(path, "wb") as fh:
        fh.write(MAGIC)
        fh.write(struct.pack("<HiH", VERSION, domain.scale, len(poly.vertices)))
        for vx, vy in poly.vertices:
            fh.write(struct.pack("<ii", vx, vy))
        fh.write(struct.pack("<Bii", code, domain.y_min, len(domain.x_lo)))
        for r in range(len(domain.x_lo)):
            fh.write(struct.pack("<ii", int(domain.x_lo[r]), int(domain.x_hi[r])))
        for r in range(len(domain.x_lo)):
            y = domain.y_min + r
            row = arr[y - y0, domain.x_lo[r] - x0 : domain.x_hi[r] - x0 + 1]
            fh.write(row.tobytes())


def read_grid(path):
    """Read a grid file; returns (domain, dense values array)."""
    with open(path, "rb") as fh:
        if fh.read(4) != MAGIC:
            raise GridFormatError("bad magic")
        version, scale, nverts = struct.unpack("<HiH", fh.read(8))
        if version != VERSION:
            raise GridFormatError(f"unsupported version {version}")
        verts = [struct.unpack("<ii", fh.read(8)) for _ in range(nverts)]
        code, y_min, nrows = struct.unpack("<Bii", fh.read(9))
        if code not in _DTYPES:
            raise GridFormatError(f"unknown dtype code {code}")
        intervals = [struct.unpack("<ii", fh.read(8)) for _ in range(nrows)]
        polygon = validate_polygon(verts)
        domain = build_domain(polygon, scale)
        if domain.y_min != y_min or len(domain.x_lo) != nrows:
            raise GridFormatError("row structure does not match the polygon")
        for r, (lo, hi) in enumerate(intervals):
            if int(domain.x_lo[r]) != lo or int(domain.x_hi[r]) != hi:
                raise GridFormatError(f"row {r} interval mismatch")
        dtype = _DTYPES[code]
        x0, y0 = domain.grid_origin()
        values = np.zeros(domain.grid_shape(), dtype=dtype)
        for r, (lo, hi) in enumerate(intervals):
            n = hi - lo + 1
            buf = fh.read(n * dtype().itemsize)
            if len(buf) != n * dtype().itemsize:
                raise GridFormatError("truncated payload")
            y = y_min + r
            values[y - y0, lo - x0 : hi - x0 + 1] = np.frombuffer(buf, dtype=dtype)
    return domain, values


def write_csv(path, domain, values):
    x0, y0 = domain.grid_origin()
    arr = np.asarray(values)
    with open(path, "w") as fh:
        fh.write("x,y,value\n")
        for x, y in domain.sites():
            fh.write(f"{x},{y},{arr[y - y0, x - x0]}\n")


def read_csv(path, domain):
    arr = np.zeros(domain.grid_shape(), dtype=np.int64)
    x0, y0 = domain.grid_origin()
    with open(path) as fh:
        header = fh.readline()
        if not header.startswith("x,y,value"):
            raise GridFormatError("bad CSV header")
        for line in fh:
            xs, ys, vs = line.strip().split(",")
            arr[int(ys) - y0, int(xs) - x0] = int(vs)
    return arr
