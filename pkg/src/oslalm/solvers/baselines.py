"""Comparison algorithms: ISTA, OS-SQS, OS+momentum and the FISTA reference.

All use a diagonal majorizer ``D``. For the subset methods
``D = L_diag + reg_curvature_diag`` majorizes the Hessian of the full
smooth cost ``l + R``.

OS+momentum follows the two-sequence Nesterov (2005) recursion over subset
updates. With ``k`` counting inner updates from zero, ``t_0 = 1`` and
``grad_k = M grad(l_m)(z_k) + grad(R)(z_k)``::

    t_{k+1} = (1 + sqrt(1 + 4 t_k^2)) / 2
    x_{k+1} = P[z_k - grad_k / D]
    v_{k+1} = P[z_0 - (sum_{i<=k} t_i grad_i) / D_k]
    z_{k+1} = (1 - 1/t_{k+1}) x_{k+1} + (1/t_{k+1}) v_{k+1}

where ``P`` projects onto the box. The relaxed variant uses the growing
majorizer ``D_k = D + (k + 2) gamma`` in the ``v`` update; ``gamma = 0``
recovers the unrelaxed recursion exactly.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from ..majorizer import compute_Ldiag
from ..regularizer import BoxConstraint, project_box, reg_curvature_diag, reg_gradient

__all__ = [
    "sqs_diag",
    "ista_step",
    "os_sqs_epoch",
    "MomentumState",
    "init_momentum_state",
    "os_nes05_epoch",
    "os_rnes05_epoch",
    "fista_reference",
]

_FREE = BoxConstraint(-np.inf, np.inf)


def sqs_diag(problem, maj_diag):
    return maj_diag + reg_curvature_diag(problem.reg, problem.grid).diag


def _box(problem):
    return problem.box or _FREE


def ista_step(x, problem, prox, maj_diag):
    """Proximal gradient step ``prox`` at ``x - grad(l)(x) / L`` in the ``L`` metric."""
    return prox(x - problem.grad(x) / maj_diag, maj_diag, x)


def os_sqs_epoch(x, problem, M, D, callback=None):
    """One OS-SQS pass: ``x <- P[x - (M grad(l_m)(x) + grad(R)(x)) / D]`` per subset."""
    subsets = problem.subsets(M)
    box = _box(problem)
    for m in problem.visit_order(M):
        gr = subsets[m].grad(x) + reg_gradient(problem.reg, problem.grid, x)
        x = project_box(box, x - gr / D)
        if callback is not None:
            callback(x)
    return x


@dataclass
class MomentumState:
    x: np.ndarray
    z: np.ndarray
    z0: np.ndarray
    acc: np.ndarray
    t: float = 1.0
    k: int = 0


def init_momentum_state(x0):
    x0 = np.asarray(x0, dtype=np.float64)
    return MomentumState(x=x0.copy(), z=x0.copy(), z0=x0.copy(), acc=np.zeros_like(x0))


def os_rnes05_epoch(state, problem, M, D, gamma, callback=None):
    """Relaxed OS+momentum pass with growing majorizer ``D + (k + 2) gamma``."""
    if gamma < 0:
        raise ValueError("gamma must be >= 0")
    subsets = problem.subsets(M)
    box = _box(problem)
    x, z, acc, t, k = state.x, state.z, state.acc, state.t, state.k
    for m in problem.visit_order(M):
        gr = subsets[m].grad(z) + reg_gradient(problem.reg, problem.grid, z)
        t_next = 0.5 * (1.0 + np.sqrt(1.0 + 4.0 * t * t))
        x = project_box(box, z - gr / D)
        acc = acc + t * gr
        Dk = D + (k + 2) * gamma if gamma else D
        v = project_box(box, state.z0 - acc / Dk)
        z = (1.0 - 1.0 / t_next) * x + (1.0 / t_next) * v
        t, k = t_next, k + 1
        if callback is not None:
            callback(x)
    return replace(state, x=x, z=z, acc=acc, t=t, k=k)


def os_nes05_epoch(state, problem, M, D, callback=None):
    """OS+momentum pass (Nesterov 2005 form over subset gradients)."""
    return os_rnes05_epoch(state, problem, M, D, 0.0, callback)


def fista_reference(problem, iters, x0=None, restart=True, tol=0.0, callback=None):
    """FISTA on the full cost with gradient-mapping adaptive restart.

    Momentum is reset whenever ``(z - x+)' D (x+ - x) > 0``, i.e. when the
    gradient mapping at the extrapolated point makes an acute angle with the
    step just taken. Stops early when the relative step falls below
    ``tol``.
    """
    if iters < 1:
        raise ValueError("iters must be >= 1")
    D = sqs_diag(problem, compute_Ldiag(problem.A, problem.W).diag)
    box = _box(problem)
    x = np.zeros(problem.n) if x0 is None else np.asarray(x0, dtype=np.float64).copy()
    z = x.copy()
    t = 1.0
    for it in range(iters):
        gr = problem.grad(z) + reg_gradient(problem.reg, problem.grid, z)
        x_new = project_box(box, z - gr / D)
        step = x_new - x
        if restart and np.dot((z - x_new) * D, step) > 0:
            t_next, z = 1.0, x_new.copy()
        else:
            t_next = 0.5 * (1.0 + np.sqrt(1.0 + 4.0 * t * t))
            z = x_new + ((t - 1.0) / t_next) * step
        x, t = x_new, t_next
        if callback is not None:
            callback(it, x)
        if tol and np.linalg.norm(step) <= tol * max(np.linalg.norm(x), 1e-300):
            break
    return x
