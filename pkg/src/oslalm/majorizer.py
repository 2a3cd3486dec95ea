"""Majorizers of the weighted quadratic data term ``x' A' W A x``."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .linalg import Diagonal, spectral_bound

__all__ = [
    "BB_ALPHA_MIN",
    "Majorizer",
    "MajorizationReport",
    "compute_Ldiag",
    "scalar_majorizer",
    "diagonal_majorizer",
    "bb_scale",
    "majorization_check",
]

BB_ALPHA_MIN = 1e-6


@dataclass(frozen=True)
class Majorizer:
    """Scalar ``L * I``, diagonal ``L_diag``, or Barzilai-Borwein scaled ``alpha * L_diag``."""

    kind: str
    L_scalar: float | None = None
    L_diag: Diagonal | None = None
    alpha: float = 1.0

    def __post_init__(self):
        if self.kind not in ("scalar", "diagonal", "bb-scaled-diagonal"):
            raise ValueError(f"unknown majorizer kind {self.kind!r}")
        if self.kind == "scalar":
            if self.L_scalar is None or not self.L_scalar > 0:
                raise ValueError("scalar majorizer needs L_scalar > 0")
        elif self.L_diag is None:
            raise ValueError(f"{self.kind} majorizer needs L_diag")
        if not 0 < self.alpha <= 1:
            raise ValueError("alpha must lie in (0, 1]")

    def diag(self, n=None):
        """Per-pixel majorizer weights as an array."""
        if self.kind == "scalar":
            if n is None:
                raise ValueError("scalar majorizer needs the image size")
            return np.full(n, self.L_scalar)
        return self.alpha * self.L_diag.diag

    def with_alpha(self, alpha):
        if self.kind == "scalar":
            raise ValueError("Barzilai-Borwein scaling needs a diagonal majorizer")
        return Majorizer("bb-scaled-diagonal", L_diag=self.L_diag, alpha=alpha)


def compute_Ldiag(A, W=None):
    """``diag(A' W A 1)``, with zero entries floored to the smallest positive one."""
    w = np.ones(A.shape[0]) if W is None else W.diag
    d = np.asarray(A.T @ (w * (A @ np.ones(A.shape[1]))), dtype=np.float64)
    pos = d[d > 0]
    if pos.size == 0:
        raise ValueError("system matrix touches no pixel")
    d = np.where(d > 0, d, pos.min())
    return Diagonal(d)


def scalar_majorizer(A, W=None, **kw):
    return Majorizer("scalar", L_scalar=spectral_bound(A, W, **kw))


def diagonal_majorizer(A, W=None):
    return Majorizer("diagonal", L_diag=compute_Ldiag(A, W))


def bb_scale(L_diag, s_k, y_k, alpha_min=BB_ALPHA_MIN):
    """Secant fit ``alpha = s'y / (s' L_diag s)`` clipped to ``[alpha_min, 1]``.

    This is the minimizer over ``alpha <= 1`` of
    ``0.5 * ||y - alpha L_diag s||^2`` in the ``L_diag^{-1}`` metric.
    """
    d = L_diag.diag if isinstance(L_diag, Diagonal) else np.asarray(L_diag)
    s_k = np.asarray(s_k, dtype=np.float64)
    den = float(s_k @ (d * s_k))
    if den == 0.0:
        raise ValueError("s_k' L_diag s_k is zero")
    alpha = float(s_k @ np.asarray(y_k, dtype=np.float64)) / den
    return min(max(alpha, alpha_min), 1.0)


@dataclass(frozen=True)
class MajorizationReport:
    passed: bool
    worst_margin: float
    samples: int


def majorization_check(A, W, majorizer, samples=1000, seed=0, tol=1e-10, polish=5):
    """Sample ``(x, xbar)`` pairs and check ``||A(x-xbar)||_W^2 <= ||x-xbar||_maj^2``.

    Half of the pairs are pushed toward the worst-case direction by
    ``polish`` generalized power steps, so undersized majorizers are caught
    even when the violating subspace is thin. The margin is reported relative to ``||x - xbar||_maj^2`` so it is
    scale-free; the check fails if any margin drops below ``-tol``.
    """
    if samples < 1:
        raise ValueError("samples must be >= 1")
    rng = np.random.default_rng(seed)
    n = A.shape[1]
    w = np.ones(A.shape[0]) if W is None else W.diag
    dmaj = majorizer.diag(n)
    worst = np.inf
    block = 100
    done = 0
    while done < samples:
        b = min(block, samples - done)
        V = rng.standard_normal((n, b)) - rng.standard_normal((n, b))
        # polish every other pair toward the worst direction with a few
        # generalized power steps on maj^{-1} A'WA
        P = V[:, ::2]
        for _ in range(polish):
            P = (A.T @ (w[:, None] * (A @ P))) / dmaj[:, None]
            P /= np.linalg.norm(P, axis=0)
        V[:, ::2] = P
        AV = A @ V
        lhs = np.einsum("ij,i,ij->j", AV, w, AV)
        rhs = np.einsum("ij,i,ij->j", V, dmaj, V)
        worst = min(worst, float(np.min((rhs - lhs) / rhs)))
        done += b
    return MajorizationReport(worst >= -tol, worst, samples)
