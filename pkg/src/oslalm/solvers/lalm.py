"""Linearized augmented Lagrangian iterates and the OS-LALM epoch.

Weighted problems use the substitution ``A <- W^{1/2} A``, ``y <- W^{1/2} y``,
so the sinogram-domain variables ``u`` and ``d`` of :func:`full_lalm_step`
live in the whitened domain. The prox metric for a diagonal majorizer
``L`` is ``rho * L``; with ``L = L_scalar * I`` this is the usual
``prox_{(t/rho) h}`` with ``t = 1 / L_scalar``.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from ..majorizer import bb_scale

__all__ = [
    "RHO_MIN",
    "SolverState",
    "u_update_quadratic",
    "continuation_rho",
    "restart_indicator",
    "init_full_state",
    "full_lalm_step",
    "init_lalm_state",
    "lalm_step",
    "oslalm_epoch",
]

RHO_MIN = 1e-3


@dataclass
class SolverState:
    """Iterate bundle.

    ``grad`` caches the (subset) data gradient at ``x`` that the next
    update consumes, so each OS inner update costs one subset gradient.
    """

    x: np.ndarray
    g: np.ndarray | None = None
    s: np.ndarray | None = None
    grad: np.ndarray | None = None
    rho: float = 1.0
    l: int = 0
    epoch: int = 0
    inner: int = 0
    u: np.ndarray | None = None
    d: np.ndarray | None = None
    alpha: float = 1.0
    restarted: bool = False
    xi: float = 0.0


def u_update_quadratic(Ax, d, y, rho):
    """Closed-form ``u`` for ``g(u) = 0.5 ||y - u||^2``."""
    if not rho > 0:
        raise ValueError("rho must be positive")
    return (rho / (rho + 1.0)) * (Ax - d) + (1.0 / (rho + 1.0)) * y


def continuation_rho(l, rho_min=RHO_MIN):
    """Downward continuation schedule.

    ``1`` at ``l = 0``; otherwise
    ``max(pi / (l + 1) * sqrt(1 - (pi / (2 l + 2))**2), rho_min)``.
    """
    if l < 0:
        raise ValueError("l must be >= 0")
    if l == 0:
        return 1.0
    return max(np.pi / (l + 1) * np.sqrt(1.0 - (np.pi / (2 * l + 2)) ** 2), rho_min)


def restart_indicator(g_prev, grad_new, grad_prev):
    """``(g - grad(x+))' (grad(x+) - grad(x))``; a restart fires when it is > 0."""
    g_prev, grad_new, grad_prev = map(np.asarray, (g_prev, grad_new, grad_prev))
    if not g_prev.shape == grad_new.shape == grad_prev.shape:
        raise ValueError("restart_indicator needs equal-length vectors")
    return float(np.dot(g_prev - grad_new, grad_new - grad_prev))


def _metric(maj_diag, rho, alpha=1.0):
    return (rho * alpha) * maj_diag


def init_full_state(problem, x0, rho, u0=None):
    """Sinogram-domain state with ``d0 = (y - u0) / rho`` so that ``u + rho d = y``."""
    x0 = np.asarray(x0, dtype=np.float64)
    sw = problem.sqrt_w
    yt = sw * problem.y
    u0 = sw * (problem.A @ x0) if u0 is None else np.asarray(u0, dtype=np.float64)
    d0 = (yt - u0) / rho
    return SolverState(x=x0.copy(), u=u0, d=d0, rho=rho)


def full_lalm_step(state, problem, prox, maj_diag, rho):
    """One unsimplified linearized AL update ``(x, u, d) -> (x+, u+, d+)``."""
    sw = problem.sqrt_w
    yt = sw * problem.y
    x, u, d = state.x, state.u, state.d
    Ax = sw * (problem.A @ x)
    s = rho * (problem.AT @ (sw * (Ax - u - d)))
    metric = _metric(maj_diag, rho)
    x_new = prox(x - s / metric, metric, x)
    Ax_new = sw * (problem.A @ x_new)
    u_new = u_update_quadratic(Ax_new, d, yt, rho)
    d_new = d - Ax_new + u_new
    return replace(state, x=x_new, u=u_new, d=d_new, s=s, rho=rho, inner=state.inner + 1)


def init_lalm_state(x0, grad_fn):
    """Gradient-based state with ``g0 = grad(x0)`` (i.e. ``u0 = A x0``)."""
    x0 = np.asarray(x0, dtype=np.float64)
    gr = grad_fn(x0)
    return SolverState(x=x0.copy(), g=gr.copy(), grad=gr)


def lalm_step(state, grad_fn, prox, maj_diag, rho, alpha=1.0):
    """One gradient-based linearized AL update.

    ``s = rho grad(x) + (1 - rho) g``; ``x+ = prox`` at ``x - s / (rho L)``;
    ``g+ = rho / (rho + 1) grad(x+) + g / (rho + 1)``. ``grad_fn`` evaluates
    the gradient used by the *next* update (the next subset under OS).
    The restart indicator of this update is stored in ``xi``.
    """
    x, g, grad = state.x, state.g, state.grad
    s = rho * grad + (1.0 - rho) * g
    metric = _metric(maj_diag, rho, alpha)
    x_new = prox(x - s / metric, metric, x)
    grad_new = grad_fn(x_new)
    xi = restart_indicator(g, grad_new, grad)
    g_new = (rho / (rho + 1.0)) * grad_new + (1.0 / (rho + 1.0)) * g
    return replace(
        state, x=x_new, g=g_new, s=s, grad=grad_new, rho=rho, xi=xi, inner=state.inner + 1
    )


def oslalm_epoch(state, subsets, order, prox, maj_diag, rho_schedule, callback=None, bb=False):
    """One pass of OS-LALM over the subsets in ``order``.

    ``state.grad`` must hold ``M grad(l_m)`` at ``state.x`` for the first
    subset in ``order``. ``rho_schedule(state)`` returns the penalty for the
    upcoming update; it is consulted before every inner update, and the
    continuation counter ``l`` is advanced (or reset when the restart
    indicator is positive) after each one. ``callback(state)`` runs after
    every inner update.

    With ``bb`` the metric scale ``alpha`` is refit after every inner
    update from ``s = x+ - x`` and ``y = M H_m s`` of the next subset.
    Refitting once per epoch instead lets one small ``alpha`` drive all
    ``M`` updates of an epoch and diverges.
    """
    M = len(order)
    state = replace(state, epoch=state.epoch + 1, inner=0)
    for j in range(M):
        nxt = subsets[order[(j + 1) % M]]
        rho = rho_schedule(state)
        x_prev = state.x
        state = lalm_step(state, nxt.grad, prox, maj_diag, rho, state.alpha)
        if bb:
            step = state.x - x_prev
            if np.any(step):
                state = replace(state, alpha=bb_scale(maj_diag, step, nxt.hess_vec(step)))
        if state.xi > 0:
            state = replace(state, l=0, restarted=True)
        else:
            state = replace(state, l=state.l + 1, restarted=False)
        if callback is not None:
            callback(state)
    return state
