"""Edge-preserving finite-difference regularizer and box constraint.

``R(x) = beta * sum psi(x_j - x_k)`` over horizontal and vertical neighbour
pairs (each pair counted once), with ``psi`` either quadratic or Fair.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .linalg import Diagonal

__all__ = [
    "Potential",
    "RegularizerConfig",
    "BoxConstraint",
    "reg_value",
    "reg_gradient",
    "reg_curvature_diag",
    "reg_hessian",
    "project_box",
]


@dataclass(frozen=True)
class Potential:
    """Pairwise potential.

    ``quadratic``: ``psi(t) = t**2 / 2``.
    ``fair``: ``psi(t) = delta**2 * (|t|/delta - log(1 + |t|/delta))``.
    Both have ``psi'' <= 1``.
    """

    kind: str = "fair"
    delta: float = 1.0

    def __post_init__(self):
        if self.kind not in ("quadratic", "fair"):
            raise ValueError(f"unknown potential {self.kind!r}")
        if self.kind == "fair" and not self.delta > 0:
            raise ValueError("fair potential needs delta > 0")

    def value(self, t):
        if self.kind == "quadratic":
            return 0.5 * t * t
        a = np.abs(t) / self.delta
        return self.delta**2 * (a - np.log1p(a))

    def deriv(self, t):
        if self.kind == "quadratic":
            return t
        return t / (1.0 + np.abs(t) / self.delta)

    def curvature(self, t):
        if self.kind == "quadratic":
            return np.ones_like(t)
        return 1.0 / (1.0 + np.abs(t) / self.delta) ** 2


@dataclass(frozen=True)
class RegularizerConfig:
    beta: float = 0.0
    potential: Potential = field(default_factory=Potential)
    neighborhood: str = "4"

    def __post_init__(self):
        if not np.isfinite(self.beta) or self.beta < 0:
            raise ValueError("beta must be finite and non-negative")
        if self.neighborhood != "4":
            raise ValueError("only the 2-D 4-neighbourhood is supported")


@dataclass(frozen=True)
class BoxConstraint:
    lo: float = 0.0
    hi: float = np.inf

    def __post_init__(self):
        if self.lo > self.hi:
            raise ValueError("box needs lo <= hi")

    def contains(self, x, tol=0.0):
        x = np.asarray(x)
        return bool(np.all(x >= self.lo - tol) and np.all(x <= self.hi + tol))


def _diffs(grid, x):
    img = np.asarray(x, dtype=np.float64).reshape(grid.shape)
    return img[:, 1:] - img[:, :-1], img[1:, :] - img[:-1, :]


def reg_value(cfg, grid, x):
    if cfg.beta == 0.0:
        return 0.0
    dh, dv = _diffs(grid, x)
    psi = cfg.potential.value
    return float(cfg.beta * (psi(dh).sum() + psi(dv).sum()))


def reg_gradient(cfg, grid, x):
    """Analytic gradient of :func:`reg_value`."""
    g = np.zeros(grid.shape)
    if cfg.beta == 0.0:
        return g.ravel()
    dh, dv = _diffs(grid, x)
    ph, pv = cfg.potential.deriv(dh), cfg.potential.deriv(dv)
    g[:, 1:] += ph
    g[:, :-1] -= ph
    g[1:, :] += pv
    g[:-1, :] -= pv
    return cfg.beta * g.ravel()


def _neighbor_count(grid):
    cnt = np.zeros(grid.shape)
    cnt[:, 1:] += 1
    cnt[:, :-1] += 1
    cnt[1:, :] += 1
    cnt[:-1, :] += 1
    return cnt.ravel()


def reg_curvature_diag(cfg, grid):
    """Diagonal majorizer of the regularizer Hessian.

    Gershgorin row-sum bound ``2 * beta * (number of neighbours)``, valid
    because ``psi'' <= 1`` for both potentials.
    """
    return Diagonal(2.0 * cfg.beta * _neighbor_count(grid))


def reg_hessian(cfg, grid, x):
    """Explicit dense Hessian of ``R`` at ``x``; small grids only."""
    n = grid.size
    H = np.zeros((n, n))
    if cfg.beta == 0.0:
        return H
    dh, dv = _diffs(grid, x)
    idx = np.arange(n).reshape(grid.shape)
    pairs = [
        (idx[:, 1:].ravel(), idx[:, :-1].ravel(), cfg.potential.curvature(dh).ravel()),
        (idx[1:, :].ravel(), idx[:-1, :].ravel(), cfg.potential.curvature(dv).ravel()),
    ]
    for j, k, c in pairs:
        np.add.at(H, (j, j), c)
        np.add.at(H, (k, k), c)
        np.add.at(H, (j, k), -c)
        np.add.at(H, (k, j), -c)
    return cfg.beta * H


def project_box(box, x):
    return np.clip(np.asarray(x, dtype=np.float64), box.lo, box.hi)
