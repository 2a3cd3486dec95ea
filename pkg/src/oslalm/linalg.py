"""Dense/sparse/diagonal linear algebra shared by every other module.

Images, sinograms and gradients are plain 1-D ``float64`` numpy arrays.
System matrices are ``scipy.sparse.csr_matrix`` instances validated by
:func:`as_sparse`; diagonal operators (statistical weights, SQS majorizers)
are wrapped in :class:`Diagonal`.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

__all__ = [
    "SAFETY_FACTOR",
    "ConvergenceError",
    "Diagonal",
    "as_vector",
    "as_sparse",
    "spmv",
    "spmv_t",
    "weighted_norm_sq",
    "spectral_bound",
]

#: Inflation applied to the power-iteration estimate so the returned
#: Lipschitz constant strictly majorizes ``A'WA``.
SAFETY_FACTOR = 1.01


class ConvergenceError(RuntimeError):
    """An iterative estimate did not converge; ``estimate`` holds the last value."""

    def __init__(self, message, estimate):
        super().__init__(message)
        self.estimate = estimate


def as_vector(values, name="vector"):
    """Return ``values`` as a contiguous 1-D float64 array with finite entries."""
    v = np.ascontiguousarray(values, dtype=np.float64).ravel()
    if not np.all(np.isfinite(v)):
        raise ValueError(f"{name} contains non-finite entries")
    return v


def as_sparse(A):
    """Validate and return ``A`` in canonical CSR form.

    Column indices must lie in ``[0, cols)`` and be sorted within each row.
    Duplicate entries are summed.
    """
    A = sp.csr_matrix(A, dtype=np.float64)
    if A.nnz and (A.indices.min() < 0 or A.indices.max() >= A.shape[1]):
        raise ValueError("column index out of range")
    if len(A.indices) != len(A.data):
        raise ValueError("index and value arrays differ in length")
    A.sum_duplicates()
    A.sort_indices()
    if not np.all(np.isfinite(A.data)):
        raise ValueError("sparse matrix contains non-finite entries")
    return A


@dataclass(frozen=True)
class Diagonal:
    """Diagonal operator ``diag(d)``; used for weights and SQS majorizers."""

    diag: np.ndarray

    def __post_init__(self):
        d = as_vector(self.diag, "diagonal")
        d.setflags(write=False)
        object.__setattr__(self, "diag", d)

    @classmethod
    def identity(cls, n):
        return cls(np.ones(n))

    @property
    def size(self):
        return self.diag.size

    def is_nonnegative(self):
        return bool(np.all(self.diag >= 0))

    def __matmul__(self, v):
        v = np.asarray(v, dtype=np.float64)
        if v.shape[0] != self.size:
            raise ValueError(f"dimension mismatch: {v.shape[0]} != {self.size}")
        return self.diag * v

    def scaled(self, c):
        return Diagonal(c * self.diag)


def _check_len(n, expected, what):
    if n != expected:
        raise ValueError(f"dimension mismatch: {what} has length {n}, expected {expected}")


def spmv(A, x):
    """Forward product ``A @ x``."""
    x = np.asarray(x, dtype=np.float64)
    _check_len(x.shape[0], A.shape[1], "x")
    return A @ x


def spmv_t(A, r):
    """Adjoint product ``A' @ r`` (back-projection)."""
    r = np.asarray(r, dtype=np.float64)
    _check_len(r.shape[0], A.shape[0], "r")
    return A.T @ r


def weighted_norm_sq(v, D=None):
    """``sum_i D_i v_i**2``; plain squared norm when ``D`` is None."""
    v = np.asarray(v, dtype=np.float64)
    if D is None:
        return float(v @ v)
    d = D.diag if isinstance(D, Diagonal) else np.asarray(D, dtype=np.float64)
    _check_len(v.shape[0], d.shape[0], "v")
    return float(np.dot(d, v * v))


def spectral_bound(A, W=None, iters=500, tol=1e-10, seed=0):
    """Strict upper bound ``L > lambda_max(A' W A)`` by power iteration.

    The iteration starts from the all-ones vector plus one deterministic
    random perturbation, and the final Rayleigh quotient is inflated by
    :data:`SAFETY_FACTOR`.

    Raises
    ------
    ConvergenceError
        If the relative change of the estimate is still above ``tol`` after
        ``iters`` iterations. The last estimate is attached.
    """
    if iters < 1:
        raise ValueError("iters must be >= 1")
    w = np.ones(A.shape[0]) if W is None else (W.diag if isinstance(W, Diagonal) else np.asarray(W))
    _check_len(w.shape[0], A.shape[0], "W")
    rng = np.random.default_rng(seed)
    v = np.ones(A.shape[1]) + 0.1 * rng.standard_normal(A.shape[1])
    v /= np.linalg.norm(v)
    est = 0.0
    for _ in range(iters):
        Av = A @ v
        z = A.T @ (w * Av)
        new = float(v @ z)  # Rayleigh quotient, <= lambda_max
        nz = np.linalg.norm(z)
        if nz == 0.0:
            return 0.0
        v = z / nz
        if abs(new - est) <= tol * max(abs(new), 1e-300):
            return SAFETY_FACTOR * new
        est = new
    raise ConvergenceError(
        f"power iteration did not reach tol={tol} in {iters} iterations", SAFETY_FACTOR * est
    )
