"""Raw float32 arrays with text sidecars, and 16-bit PGM export.

Array files hold little-endian IEEE float32 values in C (row-major) order,
with no header. A sidecar is a plain text file of ``key = value`` lines;
blank lines and lines starting with ``#`` are ignored. Values are parsed
as int, then float, then left as strings.

Image sidecars carry ``nx``, ``ny``, ``pixel_size`` and ``roi_radius``.
Scan sidecars additionally carry ``n_views``, ``n_bins`` and
``bin_spacing``; angles are uniform over ``[0, pi)``.
"""

from __future__ import annotations

from pathlib import Path

import numpy as np

from .ct import Geometry, ImageGrid

__all__ = [
    "RAW_DTYPE",
    "write_raw",
    "read_raw",
    "write_sidecar",
    "read_sidecar",
    "grid_meta",
    "geometry_meta",
    "grid_from_meta",
    "geometry_from_meta",
    "save_image",
    "load_image",
    "export_pgm",
    "read_pgm",
]

RAW_DTYPE = np.dtype("<f4")


def write_raw(path, values):
    """Write ``values`` as little-endian float32; returns the written array."""
    arr = np.ascontiguousarray(np.asarray(values), dtype=RAW_DTYPE)
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"{path}: refusing to write non-finite values")
    Path(path).write_bytes(arr.tobytes())
    return arr


def read_raw(path, count=None):
    """Read a float32 file as float64; checks the length when ``count`` is given."""
    data = np.frombuffer(Path(path).read_bytes(), dtype=RAW_DTYPE)
    if count is not None and data.size != count:
        raise ValueError(f"{path}: expected {count} values, found {data.size}")
    return data.astype(np.float64)


def _parse(v):
    for cast in (int, float):
        try:
            return cast(v)
        except ValueError:
            pass
    return v


def write_sidecar(path, meta):
    lines = [f"{k} = {v!r}" if isinstance(v, float) else f"{k} = {v}" for k, v in meta.items()]
    Path(path).write_text("\n".join(lines) + "\n")


def read_sidecar(path):
    meta = {}
    for n, line in enumerate(Path(path).read_text().splitlines(), 1):
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        key, sep, val = line.partition("=")
        if not sep:
            raise ValueError(f"{path}:{n}: expected 'key = value'")
        meta[key.strip()] = _parse(val.strip())
    return meta


def grid_meta(grid):
    return {
        "nx": grid.nx,
        "ny": grid.ny,
        "pixel_size": float(grid.pixel_size),
        "roi_radius": float(grid.roi_radius),
    }


def geometry_meta(geo):
    return {"n_views": geo.n_views, "n_bins": geo.n_bins, "bin_spacing": float(geo.bin_spacing)}


def _need(meta, keys, path):
    missing = [k for k in keys if k not in meta]
    if missing:
        raise ValueError(f"{path}: sidecar lacks {', '.join(missing)}")


def grid_from_meta(meta, path="sidecar"):
    _need(meta, ("nx", "ny", "pixel_size"), path)
    return ImageGrid(meta["nx"], meta["ny"], float(meta["pixel_size"]), meta.get("roi_radius"))


def geometry_from_meta(meta, path="sidecar"):
    _need(meta, ("n_views", "n_bins", "bin_spacing"), path)
    return Geometry(meta["n_views"], meta["n_bins"], float(meta["bin_spacing"]))


def save_image(stem, x, grid, **extra):
    """Write ``stem.f32`` and ``stem.txt``; returns the two paths."""
    x = np.asarray(x)
    if x.size != grid.size:
        raise ValueError(f"image has {x.size} pixels, grid has {grid.size}")
    # append rather than replace: run labels such as "OS-LALM-8-0.1-1" contain dots
    raw, side = Path(f"{stem}.f32"), Path(f"{stem}.txt")
    write_raw(raw, x)
    write_sidecar(side, {**grid_meta(grid), **extra})
    return raw, side


def load_image(stem):
    side = Path(f"{stem}.txt")
    grid = grid_from_meta(read_sidecar(side), side)
    return read_raw(Path(f"{stem}.f32"), grid.size), grid


def export_pgm(path, x, grid, window=None):
    """Write a binary 16-bit PGM of the image, linearly mapping ``window = (lo, hi)`` to ``0..65535``.

    Without a window the image's own min and max are used. Values outside
    the window are clipped. Display only; the window is not stored.
    """
    img = np.asarray(x, dtype=np.float64).reshape(grid.shape)
    lo, hi = (float(img.min()), float(img.max())) if window is None else map(float, window)
    if not hi > lo:
        hi = lo + 1.0
    scaled = np.clip((img - lo) / (hi - lo), 0.0, 1.0)
    # row 0 of the array is the bottom of the image (smallest y)
    data = np.round(scaled[::-1] * 65535).astype(">u2")
    with open(path, "wb") as fh:
        fh.write(f"P5\n{grid.nx} {grid.ny}\n65535\n".encode("ascii"))
        fh.write(data.tobytes())


def read_pgm(path):
    """Read a binary 16-bit PGM written by :func:`export_pgm` into a ``uint16`` array (top row first)."""
    raw = Path(path).read_bytes()
    tokens, pos = [], 0
    while len(tokens) < 4:
        while pos < len(raw) and raw[pos : pos + 1].isspace():
            pos += 1
        end = pos
        while end < len(raw) and not raw[end : end + 1].isspace():
            end += 1
        tokens.append(raw[pos:end])
        pos = end
    if tokens[0] != b"P5" or int(tokens[3]) != 65535:
        raise ValueError(f"{path}: not a 16-bit binary PGM")
    w, h = int(tokens[1]), int(tokens[2])
    data = np.frombuffer(raw[pos + 1 : pos + 1 + 2 * w * h], dtype=">u2")
    return data.reshape(h, w).astype(np.uint16)
