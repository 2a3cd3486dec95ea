"""Proximal mappings of ``h = R + box indicator`` in a diagonal metric.

Every prox here solves

    minimize_x  R(x) + 0.5 * ||x - target||^2_metric   subject to  x in box

where ``metric`` is a positive per-pixel weight vector.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from ..regularizer import BoxConstraint, project_box, reg_curvature_diag, reg_gradient

__all__ = ["inner_denoise", "FistaProx", "ExactQuadraticProx", "laplacian"]


def inner_denoise(x_warm, metric, target, cfg, grid, box, n):
    """``n`` FISTA iterations on the constrained denoising problem.

    Starts from ``x_warm``. The step uses the diagonal majorizer
    ``metric + reg_curvature_diag``, so the box projection stays elementwise.
    With ``beta == 0`` the problem is separable and the exact answer
    ``project_box(target)`` is returned.
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    box = box or BoxConstraint(-np.inf, np.inf)
    if cfg.beta == 0.0:
        return project_box(box, target)
    metric = np.asarray(metric, dtype=np.float64)
    D = metric + reg_curvature_diag(cfg, grid).diag
    x_prev = np.asarray(x_warm, dtype=np.float64)
    v = x_prev
    t = 1.0
    for _ in range(n):
        grad = metric * (v - target) + reg_gradient(cfg, grid, v)
        x = project_box(box, v - grad / D)
        t_next = 0.5 * (1.0 + np.sqrt(1.0 + 4.0 * t * t))
        v = x + ((t - 1.0) / t_next) * (x - x_prev)
        x_prev, t = x, t_next
    return x_prev


@dataclass(frozen=True)
class FistaProx:
    """Inexact prox by ``n`` warm-started FISTA iterations."""

    cfg: object
    grid: object
    box: BoxConstraint | None = None
    n: int = 1

    def __call__(self, target, metric, x_warm):
        return inner_denoise(x_warm, metric, target, self.cfg, self.grid, self.box, self.n)


def laplacian(grid):
    """Sparse graph Laplacian of the 4-neighbour pixel graph."""
    ny, nx = grid.shape
    idx = np.arange(grid.size).reshape(grid.shape)
    i = np.concatenate([idx[:, 1:].ravel(), idx[1:, :].ravel()])
    j = np.concatenate([idx[:, :-1].ravel(), idx[:-1, :].ravel()])
    ones = np.ones(i.size)
    B = sp.csr_matrix(
        (np.concatenate([ones, -ones]), (np.tile(np.arange(i.size), 2), np.concatenate([i, j]))),
        shape=(i.size, grid.size),
    )
    return (B.T @ B).tocsc()


@dataclass
class ExactQuadraticProx:
    """Exact prox for the quadratic potential without a box (sparse direct solve)."""

    cfg: object
    grid: object

    def __post_init__(self):
        if self.cfg.beta and self.cfg.potential.kind != "quadratic":
            raise ValueError("exact prox needs the quadratic potential")
        self._lap = self.cfg.beta * laplacian(self.grid)

    def __call__(self, target, metric, x_warm=None):
        metric = np.asarray(metric, dtype=np.float64)
        if self.cfg.beta == 0.0:
            return np.array(target, dtype=np.float64)
        K = (self._lap + sp.diags(metric)).tocsc()
        return spla.spsolve(K, metric * target)
