"""Desk-scale 2-D parallel-beam CT.

Image layout: a vector of length ``ny * nx`` holding a row-major ``(ny, nx)``
array. Pixel ``(iy, ix)`` is centred at
``((ix - (nx - 1) / 2) * pixel_size, (iy - (ny - 1) / 2) * pixel_size)``.

Sinogram layout: a vector of length ``n_views * n_bins`` holding a
row-major ``(n_views, n_bins)`` array. The ray for view ``v`` and bin ``b``
is the line ``{p : p . (cos a, sin a) = t_b}`` with ``a = angles[v]`` and
``t_b = (b - (n_bins - 1) / 2) * bin_spacing``.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp

from .linalg import Diagonal, as_sparse

__all__ = [
    "S_AXIAL",
    "S_HELICAL",
    "ImageGrid",
    "Geometry",
    "Ellipse",
    "SubsetPartition",
    "make_phantom",
    "default_phantom",
    "build_system_matrix",
    "ray_chord_length",
    "synthesize_weights",
    "bit_reversal_order",
    "partition_subsets",
    "subset_rows",
    "max_subsets_axial",
    "max_subsets_helical",
    "roi_mask",
    "rms_diff",
    "fbp",
]

#: Minimum number of views per subset for axial scans.
S_AXIAL = 40
#: Minimum number of views per subset for helical scans.
S_HELICAL = 24


@dataclass(frozen=True)
class ImageGrid:
    nx: int
    ny: int
    pixel_size: float = 1.0
    roi_radius: float | None = None

    def __post_init__(self):
        if self.nx < 1 or self.ny < 1:
            raise ValueError("grid must have at least one pixel per axis")
        half = 0.5 * min(self.nx, self.ny) * self.pixel_size
        if self.roi_radius is None:
            object.__setattr__(self, "roi_radius", half)
        elif self.roi_radius > half * (1 + 1e-12):
            raise ValueError(f"roi_radius {self.roi_radius} exceeds inscribed radius {half}")

    @property
    def shape(self):
        return (self.ny, self.nx)

    @property
    def size(self):
        return self.nx * self.ny

    def centers(self):
        """Pixel-centre coordinates ``(X, Y)``, each of shape ``(ny, nx)``."""
        xs = (np.arange(self.nx) - (self.nx - 1) / 2) * self.pixel_size
        ys = (np.arange(self.ny) - (self.ny - 1) / 2) * self.pixel_size
        return np.meshgrid(xs, ys)


@dataclass(frozen=True)
class Geometry:
    n_views: int
    n_bins: int
    bin_spacing: float = 1.0
    angles: np.ndarray | None = field(default=None, compare=False)

    def __post_init__(self):
        if self.n_views < 1 or self.n_bins < 1:
            raise ValueError("geometry needs at least one view and one bin")
        if self.angles is None:
            ang = np.pi * np.arange(self.n_views) / self.n_views
        else:
            ang = np.asarray(self.angles, dtype=np.float64)
            if ang.shape != (self.n_views,):
                raise ValueError("angles must have one entry per view")
            if np.any(np.diff(ang) <= 0):
                raise ValueError("angles must be strictly increasing")
        ang.setflags(write=False)
        object.__setattr__(self, "angles", ang)

    @property
    def n_rays(self):
        return self.n_views * self.n_bins

    def bin_offsets(self):
        return (np.arange(self.n_bins) - (self.n_bins - 1) / 2) * self.bin_spacing


@dataclass(frozen=True)
class Ellipse:
    """Ellipse centred at ``(cx, cy)`` with semi-axes ``(ax, ay)`` rotated by ``phi`` radians."""

    cx: float
    cy: float
    ax: float
    ay: float
    phi: float = 0.0
    density: float = 1.0


def make_phantom(grid, ellipses):
    """Rasterize a sum of uniform ellipses at pixel centres, clamped at zero."""
    X, Y = grid.centers()
    img = np.zeros(grid.shape)
    for e in ellipses:
        c, s = np.cos(e.phi), np.sin(e.phi)
        u = (X - e.cx) * c + (Y - e.cy) * s
        v = -(X - e.cx) * s + (Y - e.cy) * c
        img[(u / e.ax) ** 2 + (v / e.ay) ** 2 <= 1.0] += e.density
    return np.maximum(img, 0.0).ravel()


def default_phantom(grid, water=0.2):
    """Body-like test phantom in attenuation units (per length unit).

    A water ellipse with two low-density lung regions, a bone insert and a
    few low-contrast lesions. ``water`` sets the overall scale.
    """
    R = 0.5 * min(grid.nx, grid.ny) * grid.pixel_size
    w = water
    ellipses = [
        Ellipse(0.0, 0.0, 0.88 * R, 0.68 * R, 0.0, w),
        Ellipse(-0.40 * R, 0.05 * R, 0.26 * R, 0.38 * R, 0.2, -0.7 * w),
        Ellipse(0.40 * R, 0.05 * R, 0.26 * R, 0.38 * R, -0.2, -0.7 * w),
        Ellipse(0.0, -0.45 * R, 0.12 * R, 0.10 * R, 0.0, 0.9 * w),
        Ellipse(0.0, 0.30 * R, 0.10 * R, 0.10 * R, 0.0, 0.1 * w),
        Ellipse(-0.35 * R, 0.10 * R, 0.06 * R, 0.06 * R, 0.0, 0.4 * w),
        Ellipse(0.10 * R, -0.10 * R, 0.08 * R, 0.05 * R, 0.5, -0.1 * w),
    ]
    return make_phantom(grid, ellipses)


def _ray_segments(grid, theta, t):
    """Siddon traversal of one ray: ``(pixel_indices, lengths)``."""
    ps = grid.pixel_size
    xmin, xmax = -grid.nx * ps / 2, grid.nx * ps / 2
    ymin, ymax = -grid.ny * ps / 2, grid.ny * ps / 2
    c, s = np.cos(theta), np.sin(theta)
    p0x, p0y = t * c, t * s
    ex, ey = -s, c
    tiny = 1e-15

    lo, hi = -np.inf, np.inf
    for p0, e, a, b in ((p0x, ex, xmin, xmax), (p0y, ey, ymin, ymax)):
        if abs(e) < tiny:
            if p0 < a or p0 > b:
                return None
        else:
            s1, s2 = (a - p0) / e, (b - p0) / e
            lo, hi = max(lo, min(s1, s2)), min(hi, max(s1, s2))
    if hi - lo <= 1e-12 * ps:
        return None

    params = [np.array([lo, hi])]
    if abs(ex) >= tiny:
        xe = xmin + ps * np.arange(grid.nx + 1)
        sx = (xe - p0x) / ex
        params.append(sx[(sx > lo) & (sx < hi)])
    if abs(ey) >= tiny:
        ye = ymin + ps * np.arange(grid.ny + 1)
        sy = (ye - p0y) / ey
        params.append(sy[(sy > lo) & (sy < hi)])
    sv = np.unique(np.concatenate(params))
    seg = np.diff(sv)
    mid = 0.5 * (sv[:-1] + sv[1:])
    ix = np.floor((p0x + mid * ex - xmin) / ps).astype(np.int64)
    iy = np.floor((p0y + mid * ey - ymin) / ps).astype(np.int64)
    np.clip(ix, 0, grid.nx - 1, out=ix)
    np.clip(iy, 0, grid.ny - 1, out=iy)
    keep = seg > 1e-12 * ps
    return iy[keep] * grid.nx + ix[keep], seg[keep]


def build_system_matrix(grid, geo):
    """Ray/pixel intersection-length system matrix (Siddon), one row per ray."""
    offsets = geo.bin_offsets()
    indptr = [0]
    indices, data = [], []
    for theta in geo.angles:
        for t in offsets:
            seg = _ray_segments(grid, theta, t)
            if seg is not None:
                idx, ln = seg
                indices.append(idx)
                data.append(ln)
                indptr.append(indptr[-1] + idx.size)
            else:
                indptr.append(indptr[-1])
    idx = np.concatenate(indices) if indices else np.zeros(0, np.int64)
    val = np.concatenate(data) if data else np.zeros(0)
    A = sp.csr_matrix((val, idx, np.asarray(indptr)), shape=(geo.n_rays, grid.size))
    return as_sparse(A)


def ray_chord_length(grid, theta, t):
    """Length of the ray ``(theta, t)`` inside the image square."""
    seg = _ray_segments(grid, theta, t)
    return 0.0 if seg is None else float(seg[1].sum())


def synthesize_weights(A, x_true, I0, seed=0, noiseless=False):
    """Simulate transmission data and PWLS weights.

    Mean counts are ``I0 * exp(-A x_true)``. Counts are drawn Poisson from a
    seeded generator (or set to their mean when ``noiseless``), floored at
    one, log-converted to line integrals ``y = log(I0 / counts)``, and the
    weights are the detected counts.

    Returns
    -------
    y : ndarray
        Noisy sinogram.
    W : Diagonal
        Statistical weights, strictly positive.
    """
    if I0 <= 0:
        raise ValueError("I0 must be positive")
    t = A @ np.asarray(x_true, dtype=np.float64)
    mean = I0 * np.exp(-t)
    if noiseless:
        counts = mean
    else:
        counts = np.random.default_rng(seed).poisson(mean).astype(np.float64)
    counts = np.maximum(counts, 1.0)
    y = np.log(I0 / counts)
    return y, Diagonal(counts)


def bit_reversal_order(M):
    """Bit-reversal permutation of ``0..M-1``.

    ``M`` is padded to the next power of two and out-of-range entries are
    dropped, e.g. ``M=6 -> [0, 4, 2, 1, 5, 3]``.
    """
    if M < 1:
        raise ValueError("M must be >= 1")
    nbits = max(int(M - 1).bit_length(), 0)
    out = []
    for i in range(1 << nbits):
        r = int(format(i, f"0{nbits}b")[::-1], 2) if nbits else 0
        if r < M:
            out.append(r)
    return out


@dataclass(frozen=True)
class SubsetPartition:
    M: int
    view_to_subset: np.ndarray
    visit_order: tuple

    def views(self, m):
        return np.flatnonzero(self.view_to_subset == m)


def partition_subsets(geo, M):
    """Round-robin view partition (view ``v`` in subset ``v mod M``) with bit-reversal visits."""
    if M < 1 or M > geo.n_views:
        raise ValueError(f"need 1 <= M <= n_views={geo.n_views}, got M={M}")
    v2s = np.arange(geo.n_views) % M
    v2s.setflags(write=False)
    return SubsetPartition(M, v2s, tuple(bit_reversal_order(M)))


def subset_rows(geo, partition, m):
    """Sinogram row indices belonging to subset ``m``."""
    views = partition.views(m)
    return (views[:, None] * geo.n_bins + np.arange(geo.n_bins)[None, :]).ravel()


def max_subsets_axial(n_views, s_axial=S_AXIAL):
    """Largest ``M`` leaving at least ``s_axial`` views per subset (minimum 1)."""
    if s_axial < 1:
        raise ValueError("s_axial must be >= 1")
    return max(int(n_views) // int(s_axial), 1)


def max_subsets_helical(views_per_turn, d_so, d_sd, pitch, s_helical=S_HELICAL):
    """Largest ``M`` for helical scans: ``views_per_turn * d_so / (pitch * s * d_sd)``."""
    if min(views_per_turn, d_so, d_sd, pitch, s_helical) <= 0:
        raise ValueError("all inputs must be positive")
    return max(int(np.floor(views_per_turn * d_so / (pitch * s_helical * d_sd))), 1)


def roi_mask(grid):
    """Boolean vector selecting pixels whose centres lie within ``roi_radius``."""
    X, Y = grid.centers()
    return (X**2 + Y**2 <= grid.roi_radius**2 * (1 + 1e-12)).ravel()


def rms_diff(x, x_ref, grid):
    """Root-mean-square of ``x - x_ref`` over the region of interest."""
    mask = roi_mask(grid)
    if not mask.any():
        raise ValueError("empty region of interest")
    d = (np.asarray(x) - np.asarray(x_ref))[mask]
    return float(np.sqrt(np.mean(d * d)))


def fbp(sino, grid, geo):
    """Filtered back-projection with the spatial-domain Ram-Lak kernel.

    Used as a cheap initial image. The sinogram is filtered view by view
    (zero padded linear convolution) and back-projected pixel-by-pixel with
    linear interpolation along the detector.
    """
    sino = np.asarray(sino, dtype=np.float64).reshape(geo.n_views, geo.n_bins)
    tau = geo.bin_spacing
    nb = geo.n_bins
    k = np.arange(-(nb - 1), nb)
    h = np.zeros(k.size)
    h[k == 0] = 1.0 / (4 * tau * tau)
    odd = k % 2 == 1
    h[odd] = -1.0 / (np.pi * k[odd] * tau) ** 2
    q = np.array([tau * np.convolve(row, h)[nb - 1 : 2 * nb - 1] for row in sino])
    X, Y = grid.centers()
    X, Y = X.ravel(), Y.ravel()
    tb = geo.bin_offsets()
    out = np.zeros(grid.size)
    for v, a in enumerate(geo.angles):
        out += np.interp(X * np.cos(a) + Y * np.sin(a), tb, q[v], left=0.0, right=0.0)
    return out * (np.pi / geo.n_views)
