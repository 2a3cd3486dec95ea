"""PWLS problem container: data term, subsets, regularizer and box."""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

from ..ct import (
    ImageGrid,
    bit_reversal_order,
    build_system_matrix,
    partition_subsets,
    rms_diff,
    subset_rows,
)
from ..linalg import Diagonal, as_sparse
from ..regularizer import BoxConstraint, RegularizerConfig, reg_value

__all__ = ["SubsetData", "Problem", "ObjectiveValue", "objective"]


@dataclass(frozen=True)
class ObjectiveValue:
    """``value`` is the smooth cost; ``feasible`` reports the box indicator."""

    value: float
    feasible: bool

    def __float__(self):
        return self.value if self.feasible else np.inf


def objective(A, W, y, cfg, grid, box, x):
    """``0.5 ||y - A x||_W^2 + R(x)``; box violations are flagged, not added."""
    r = y - A @ x
    w = np.ones_like(r) if W is None else W.diag
    val = 0.5 * float(np.dot(w, r * r)) + reg_value(cfg, grid, x)
    ok = True if box is None else box.contains(x, tol=0.0)
    return ObjectiveValue(val, ok)


@dataclass(frozen=True)
class SubsetData:
    """Rows of one subset, pre-sliced: ``grad(x) = scale * A_m' W_m (A_m x - y_m)``."""

    A: object
    AT: object
    w: np.ndarray
    y: np.ndarray
    scale: float

    def grad(self, x):
        return self.scale * (self.AT @ (self.w * (self.A @ x - self.y)))

    def hess_vec(self, v):
        return self.scale * (self.AT @ (self.w * (self.A @ v)))


@dataclass
class Problem:
    """``min_x 0.5 ||y - A x||_W^2 + R(x)`` subject to ``x`` in ``box``.

    With a CT ``geo`` the subsets follow the round-robin view partition;
    without one, individual rows are dealt round-robin.
    """

    A: object
    W: Diagonal
    y: np.ndarray
    grid: ImageGrid
    reg: RegularizerConfig = field(default_factory=RegularizerConfig)
    box: BoxConstraint | None = None
    geo: object = None
    x_true: np.ndarray | None = None
    x_ref: np.ndarray | None = None

    def __post_init__(self):
        self.A = as_sparse(self.A)
        self.y = np.asarray(self.y, dtype=np.float64)
        if self.W is None:
            self.W = Diagonal.identity(self.A.shape[0])
        if self.A.shape != (self.y.size, self.grid.size):
            raise ValueError(
                f"shape mismatch: A is {self.A.shape}, y has {self.y.size}, grid has {self.grid.size}"
            )
        if self.W.size != self.y.size:
            raise ValueError("weights and sinogram differ in length")
        self._subsets = {}

    @property
    def n(self):
        return self.A.shape[1]

    @cached_property
    def AT(self):
        return self.A.T.tocsr()

    @cached_property
    def sqrt_w(self):
        return np.sqrt(self.W.diag)

    def grad(self, x):
        """Full data-term gradient ``A' W (A x - y)``."""
        return self.AT @ (self.W.diag * (self.A @ x - self.y))

    def objective(self, x):
        return objective(self.A, self.W, self.y, self.reg, self.grid, self.box, x)

    def rmsd(self, x, ref=None):
        ref = self.x_ref if ref is None else ref
        if ref is None:
            return np.nan
        return rms_diff(x, ref, self.grid)

    def subset_views(self, M):
        if self.geo is None:
            return [np.arange(m, self.y.size, M) for m in range(M)]
        part = partition_subsets(self.geo, M)
        return [subset_rows(self.geo, part, m) for m in range(M)]

    def subsets(self, M):
        """Pre-sliced :class:`SubsetData` list for ``M`` subsets (cached)."""
        if M not in self._subsets:
            out = []
            for rows in self.subset_views(M):
                Am = self.A[rows]
                out.append(SubsetData(Am, Am.T.tocsr(), self.W.diag[rows], self.y[rows], float(M)))
            self._subsets[M] = out
        return self._subsets[M]

    def visit_order(self, M):
        return bit_reversal_order(M)

    @classmethod
    def from_ct(cls, grid, geo, y, W, reg=None, box=None, x_true=None, x_ref=None):
        A = build_system_matrix(grid, geo)
        return cls(A, W, y, grid, reg or RegularizerConfig(), box, geo, x_true, x_ref)
