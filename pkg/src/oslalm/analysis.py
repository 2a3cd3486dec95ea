"""Damping analysis, penalty-parameter heuristics and primal-dual gap checks.

On ``min 0.5 ||A x||^2`` the one-subset gradient-based iterates diagonalize
in the eigenbasis of ``A'A``. Component ``i`` with eigenvalue ratio
``q = lambda_i / L`` obeys the scalar recurrence

    x+ = x - (q x + (1/rho - 1) g)
    g+ = rho / (rho + 1) * q x+ + g / (rho + 1)

(``g`` measured in units of ``L``), whose characteristic polynomial is
``(1 + rho) r^2 - 2 (1 - q + rho/2) r + (1 - q)``.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .ct import ImageGrid
from .linalg import Diagonal, as_sparse, spectral_bound
from .regularizer import Potential, RegularizerConfig, reg_value
from .solvers.problem import Problem
from .solvers.prox import laplacian
from .solvers.lalm import (
    RHO_MIN,
    continuation_rho,
    full_lalm_step,
    init_full_state,
    init_lalm_state,
    lalm_step,
)
from .solvers.log import ConvergenceLog

__all__ = [
    "DampingReport",
    "critical_rho",
    "rate_critical",
    "rate_over",
    "rate_under",
    "root_modulus",
    "classify_damping",
    "rho_star",
    "rho_opt",
    "scalar_recurrence_sim",
    "log_abs_trajectory",
    "measured_rate",
    "CppdaState",
    "cppda_init",
    "cppda_step",
    "conj_quadratic",
    "GapContext",
    "make_gap_context",
    "primal_dual_gap",
    "theorem2_bound",
    "GapRun",
    "gap_run",
    "quadratic_gap_problem",
    "solve_quadratic",
    "RestartReport",
    "restart_period",
    "restart_period_check",
    "quadratic_restart_run",
]


# -- damping --------------------------------------------------------------


def _check_ratio(q):
    if not 0 < q <= 1:
        raise ValueError(f"lambda_ratio must lie in (0, 1], got {q}")


def critical_rho(q):
    """``2 sqrt(q (1 - q))``: the penalty giving a repeated root."""
    _check_ratio(q)
    return 2.0 * np.sqrt(q * (1.0 - q))


def rate_critical(q):
    """Repeated-root rate ``sqrt((1 - q) / (1 + rho_c))``."""
    return np.sqrt((1.0 - q) / (1.0 + critical_rho(q)))


def rate_over(q, rho):
    """Dominant real root for ``rho >= rho_c``."""
    qq = q * (1.0 - q)
    disc = rho * rho / 4.0 - qq
    # at rho_c the discriminant is zero up to rounding, which sqrt would amplify
    if disc <= 16 * np.finfo(float).eps * qq:
        disc = 0.0
    return (1.0 - q + rho / 2.0 + np.sqrt(disc)) / (1.0 + rho)


def rate_under(q, rho):
    """``(1 - q + rho/2) / (1 + rho)``: the real part of the complex roots."""
    return (1.0 - q + rho / 2.0) / (1.0 + rho)


def root_modulus(q, rho):
    """Largest root modulus of the characteristic polynomial."""
    roots = np.roots([1.0 + rho, -2.0 * (1.0 - q + rho / 2.0), 1.0 - q])
    return float(np.max(np.abs(roots)))


@dataclass(frozen=True)
class DampingReport:
    """Regime and rates of one eigencomponent.

    ``rate`` is the closed-form rate of the regime (for ``under`` the real
    part of the roots); ``modulus`` is the largest root modulus, which is
    what a simulation measures. The two agree except when under-damped.
    """

    lambda_ratio: float
    rho: float
    rho_c: float
    regime: str
    rate: float
    modulus: float
    damped_frequency: float | None


def classify_damping(lambda_ratio, rho, rtol=1e-12):
    """Classify the damping regime of ``(lambda_ratio, rho)``.

    ``rho`` within ``rtol`` of the critical value counts as critical.

    With ``lambda_ratio == 1`` the constant coefficient vanishes, the roots
    are ``0`` and ``rho / (1 + rho)``, every ``rho > 0`` is over-damped and
    the reported rate is the larger root.
    """
    q = float(lambda_ratio)
    _check_ratio(q)
    if not rho > 0:
        raise ValueError("rho must be positive")
    rc = critical_rho(q)
    psi = None
    if abs(rho - rc) <= rtol * max(rc, 1.0):
        regime, rate = "critical", rate_critical(q)
    elif rho > rc:
        regime, rate = "over", rate_over(q, rho)
    else:
        regime, rate = "under", rate_under(q, rho)
        c = (1.0 - q + rho / 2.0) / np.sqrt((1.0 + rho) * (1.0 - q))
        psi = float(np.arccos(np.clip(c, -1.0, 1.0)))
    if regime == "under":
        modulus = np.sqrt((1.0 - q) / (1.0 + rho))
    else:
        modulus = rate
    return DampingReport(q, float(rho), float(rc), regime, float(rate), float(modulus), psi)


def rho_star(mu, L):
    """Penalty that critically damps the slowest component, ``2 sqrt(mu/L (1 - mu/L))``."""
    if not 0 < mu <= L:
        raise ValueError("need 0 < mu <= L")
    return float(critical_rho(mu / L))


def rho_opt(x0, x_hat, A, L):
    """``||A (x0 - x_hat)|| / (sqrt(L) ||x0 - x_hat||)``."""
    e = np.asarray(x0, dtype=np.float64) - np.asarray(x_hat, dtype=np.float64)
    ne = np.linalg.norm(e)
    if ne == 0:
        raise ValueError("x0 equals x_hat")
    if not L > 0:
        raise ValueError("L must be positive")
    return float(np.linalg.norm(A @ e) / (np.sqrt(L) * ne))


def _recurrence(q, rho):
    a = 1.0 / rho - 1.0
    b = rho / (rho + 1.0)
    c = 1.0 / (rho + 1.0)

    def step(x, g):
        x = x - (q * x + a * g)
        return x, b * q * x + c * g

    return step


def scalar_recurrence_sim(lambda_ratio, rho, steps, x0=1.0, g0=0.0):
    """Exact simulation of one eigencomponent; returns ``(x, g)`` of length ``steps + 1``."""
    if steps < 2:
        raise ValueError("steps must be >= 2")
    if not rho > 0:
        raise ValueError("rho must be positive")
    step = _recurrence(float(lambda_ratio), float(rho))
    xs = np.empty(steps + 1)
    gs = np.empty(steps + 1)
    x, g = float(x0), float(g0)
    xs[0], gs[0] = x, g
    for k in range(1, steps + 1):
        x, g = step(x, g)
        xs[k], gs[k] = x, g
    return xs, gs


def log_abs_trajectory(lambda_ratio, rho, steps, x0=1.0, g0=0.0, component="x"):
    """``log|x_k|`` (or ``log ||(x_k, g_k)||`` with ``component="state"``) of the recurrence.

    The state is linear, so it is rescaled to unit size whenever it leaves
    ``[1e-100, 1e100]`` and the scale is carried in log form.
    """
    if steps < 2:
        raise ValueError("steps must be >= 2")
    if component not in ("x", "state"):
        raise ValueError("component must be 'x' or 'state'")
    step = _recurrence(float(lambda_ratio), float(rho))

    def size(x, g):
        return abs(x) if component == "x" else np.hypot(x, g)

    out = np.empty(steps + 1)
    x, g, logs = float(x0), float(g0), 0.0
    with np.errstate(divide="ignore"):
        out[0] = np.log(size(x, g))
        for k in range(1, steps + 1):
            x, g = step(x, g)
            big = max(abs(x), abs(g))
            if big and not 1e-100 < big < 1e100:
                x, g, logs = x / big, g / big, logs + np.log(big)
            out[k] = np.log(size(x, g)) + logs
    return out


def measured_rate(lambda_ratio, rho, steps=6000, tail=0.3, x0=1.0, g0=0.0):
    """``exp`` of the least-squares slope of ``log ||(x_k, g_k)||`` over the last ``tail`` of the run.

    The whole state is measured because at ``rho = 1`` the ``x`` update
    ignores ``g`` and ``x`` alone decays at ``1 - q``, faster than the
    dominant root carried by ``g``.
    """
    la = log_abs_trajectory(lambda_ratio, rho, steps, x0, g0, component="state")
    k0 = int(np.floor((1.0 - tail) * steps))
    k = np.arange(k0, steps + 1)
    y = la[k0:]
    ok = np.isfinite(y)
    if ok.sum() < 2:
        return 0.0
    slope = np.polyfit(k[ok], y[ok], 1)[0]
    return float(np.exp(slope))


# -- Chambolle-Pock form --------------------------------------------------


@dataclass(frozen=True)
class CppdaState:
    z: np.ndarray
    z_bar: np.ndarray
    x: np.ndarray


def conj_quadratic(z, y):
    """Conjugate of ``g(u) = 0.5 ||y - u||^2``: ``0.5 ||z||^2 + <z, y>``."""
    return 0.5 * float(z @ z) + float(z @ y)


def _whitened(problem):
    sw = problem.sqrt_w
    return as_sparse(problem.A.multiply(sw[:, None])), sw * problem.y


def cppda_init(problem, x0, u0, d0, rho):
    """State matching a linearized AL start ``(x0, u0, d0)`` (whitened domain).

    ``z = -rho d`` and the extrapolated dual ``z_bar = rho (A x0 - u0 - d0)``
    reproduce the first linearized AL search direction.
    """
    A, _ = _whitened(problem)
    x0 = np.asarray(x0, dtype=np.float64)
    return CppdaState(z=-rho * np.asarray(d0), z_bar=rho * (A @ x0 - u0 - d0), x=x0.copy())


def cppda_step(state, A, y, prox_h, sigma, tau):
    """One primal-dual update with over-relaxation on the dual.

    ``x+ = prox_{sigma h}(x - sigma A' z_bar)``,
    ``z+ = (z + tau A x+ - tau y) / (1 + tau)`` (the prox of ``tau g*``),
    ``z_bar+ = 2 z+ - z``. ``sigma`` may be a per-pixel vector;
    ``prox_h(target, metric, warm)`` is called with ``metric = 1 / sigma``.
    """
    sigma = np.broadcast_to(np.asarray(sigma, dtype=np.float64), state.x.shape)
    target = state.x - sigma * (A.T @ state.z_bar)
    x = prox_h(target, 1.0 / sigma, state.x)
    v = state.z + tau * (A @ x)
    z = (v - tau * y) / (1.0 + tau)
    return CppdaState(z=z, z_bar=2.0 * z - state.z, x=x)


# -- primal-dual gap ------------------------------------------------------


@dataclass(frozen=True)
class GapContext:
    """Saddle point and step parameters of a whitened problem.

    ``x0`` and ``z0 = -rho d0`` describe the start of the run whose
    averaged iterates are measured; ``norm_A_sq`` bounds ``||A||^2``.
    """

    x_hat: np.ndarray
    z_hat: np.ndarray
    sigma: float
    tau: float
    x0: np.ndarray | None = None
    z0: np.ndarray | None = None
    norm_A_sq: float | None = None

    def __post_init__(self):
        if self.norm_A_sq is not None and not self.sigma * self.tau * self.norm_A_sq < 1:
            raise ValueError("step condition sigma * tau * ||A||^2 < 1 violated")

    @property
    def rho(self):
        return self.tau

    @property
    def t(self):
        return self.sigma * self.tau


def _h_value(problem, x):
    if problem.box is not None and not problem.box.contains(x, tol=1e-12):
        return np.inf
    return reg_value(problem.reg, problem.grid, x)


def make_gap_context(problem, x_hat, rho, t, x0=None, d0=None, norm_A_sq=None):
    """Context with ``z_hat = A x_hat - y``, ``sigma = t / rho`` and ``tau = rho``."""
    if not np.isfinite(_h_value(problem, x_hat)):
        raise ValueError("x_hat is infeasible; h(x_hat) is infinite")
    A, yw = _whitened(problem)
    if norm_A_sq is None:
        norm_A_sq = spectral_bound(A) / 1.01
    z0 = None if d0 is None else -rho * np.asarray(d0, dtype=np.float64)
    return GapContext(
        x_hat=np.asarray(x_hat, dtype=np.float64),
        z_hat=A @ x_hat - yw,
        sigma=t / rho,
        tau=rho,
        x0=None if x0 is None else np.asarray(x0, dtype=np.float64),
        z0=z0,
        norm_A_sq=float(norm_A_sq),
    )


def _omega(problem, A, yw, z, x):
    return -float((A.T @ z) @ x) + conj_quadratic(z, yw) - _h_value(problem, x)


def primal_dual_gap(z_avg, x_avg, ctx, problem):
    """``Omega(z_avg, x_hat) - Omega(z_hat, x_avg)`` with ``Omega(z, x) = <-A'z, x> + g*(z) - h(x)``."""
    A, yw = _whitened(problem)
    return _omega(problem, A, yw, z_avg, ctx.x_hat) - _omega(problem, A, yw, ctx.z_hat, x_avg)


def theorem2_bound(k, ctx, eps_sequence):
    """Ergodic gap bound ``(C + 2 A_k + sqrt(B_k))^2 / k`` for inexact updates.

    ``C = ||x0 - x_hat|| / sqrt(2 t / rho) + ||z0 - z_hat|| / sqrt(2 rho)``,
    ``A_k = sum_{j<k} sqrt(eps_j / ((1 - t ||A||^2) t / rho))`` and
    ``B_k = sum_{j<k} eps_j``.
    """
    if k < 1:
        raise ValueError("k must be >= 1")
    eps = np.asarray(eps_sequence, dtype=np.float64)
    if eps.size < k:
        raise ValueError("eps_sequence shorter than k")
    if np.any(eps < 0):
        raise ValueError("eps_sequence must be non-negative")
    if ctx.x0 is None or ctx.z0 is None or ctx.norm_A_sq is None:
        raise ValueError("context lacks x0, z0 or norm_A_sq")
    rho, t = ctx.rho, ctx.t
    margin = 1.0 - t * ctx.norm_A_sq
    if margin <= 0:
        raise ValueError("t ||A||^2 >= 1 violates the step condition")
    C = np.linalg.norm(ctx.x0 - ctx.x_hat) / np.sqrt(2.0 * t / rho) + np.linalg.norm(
        ctx.z0 - ctx.z_hat
    ) / np.sqrt(2.0 * rho)
    e = eps[:k]
    Ak = float(np.sum(np.sqrt(e / (margin * t / rho))))
    Bk = float(np.sum(e))
    return float((C + 2.0 * Ak + np.sqrt(Bk)) ** 2 / k)


@dataclass(frozen=True)
class GapRun:
    gaps: np.ndarray
    bounds: np.ndarray
    ctx: GapContext


def gap_run(problem, prox, x0, x_hat, rho, iters, L=None):
    """Exact-update linearized AL run with gap and bound at every ``k = 1..iters``.

    Uses the scalar majorizer ``L`` (default :func:`spectral_bound` of the
    whitened system, safety factor included) and ``u0 = A x0``.
    """
    A, _ = _whitened(problem)
    if L is None:
        L = spectral_bound(A)
    norm_sq = L / 1.01
    state = init_full_state(problem, x0, rho)
    ctx = make_gap_context(problem, x_hat, rho, 1.0 / L, x0=x0, d0=state.d, norm_A_sq=norm_sq)
    maj = np.full(problem.n, float(L))
    zsum = np.zeros_like(state.d)
    xsum = np.zeros(problem.n)
    gaps, bounds = np.empty(iters), np.empty(iters)
    eps = np.zeros(iters)
    for k in range(1, iters + 1):
        state = full_lalm_step(state, problem, prox, maj, rho)
        zsum += -rho * state.d
        xsum += state.x
        gaps[k - 1] = primal_dual_gap(zsum / k, xsum / k, ctx, problem)
        bounds[k - 1] = theorem2_bound(k, ctx, eps)
    return GapRun(gaps, bounds, ctx)


def quadratic_gap_problem(size=16, beta=0.5, seed=0):
    """Strongly convex PWLS problem on a ``size x size`` grid with a quadratic penalty.

    ``A`` is a seeded random sparse matrix with ``1.25 n`` rows plus a
    scaled identity block, so ``A'WA`` is positive definite.
    """
    rng = np.random.default_rng(seed)
    grid = ImageGrid(size, size)
    n = grid.size
    m = int(1.25 * n)
    R = sp.random(m, n, density=0.05, random_state=seed, format="csr")
    A = sp.vstack([R, 0.1 * sp.identity(n, format="csr")]).tocsr()
    W = Diagonal(rng.uniform(0.5, 2.0, A.shape[0]))
    x_true = rng.uniform(0.0, 1.0, n)
    y = A @ x_true + 0.01 * rng.standard_normal(A.shape[0])
    reg = RegularizerConfig(beta=beta, potential=Potential("quadratic"))
    return Problem(A, W, y, grid, reg, x_true=x_true)


def solve_quadratic(problem):
    """Exact minimizer of a quadratic-penalty problem without a box (sparse direct solve)."""
    if problem.box is not None:
        raise ValueError("solve_quadratic needs an unconstrained problem")
    if problem.reg.beta and problem.reg.potential.kind != "quadratic":
        raise ValueError("solve_quadratic needs the quadratic potential")
    H = problem.AT @ sp.diags(problem.W.diag) @ problem.A
    if problem.reg.beta:
        H = H + problem.reg.beta * laplacian(problem.grid)
    return spla.spsolve(H.tocsc(), problem.AT @ (problem.W.diag * problem.y))


# -- restarts -------------------------------------------------------------


def restart_period(mu, L):
    """Predicted restart spacing ``(pi / 2) sqrt(L / mu)``."""
    if not 0 < mu <= L:
        raise ValueError("need 0 < mu <= L")
    return 0.5 * np.pi * np.sqrt(L / mu)


@dataclass(frozen=True)
class RestartReport:
    """Restart spacing versus prediction.

    ``intervals`` separates consecutive restart flags. Restarts tend to
    fire in short bursts while the stale split gradient decays, so
    ``episode_intervals`` also reports the spacing of burst onsets.
    """

    intervals: np.ndarray
    episode_intervals: np.ndarray
    mean: float
    episode_mean: float
    predicted: float
    rel_deviation: float


def restart_period_check(log, mu, L):
    """Compare the mean spacing of logged restarts with :func:`restart_period`."""
    pos = np.asarray(log.restart_positions())
    if pos.size < 2:
        raise ValueError(f"fewer than 2 restarts observed ({pos.size})")
    iv = np.diff(pos).astype(np.float64)
    onsets = pos[np.r_[True, iv > 1]]
    ep = np.diff(onsets).astype(np.float64)
    pred = restart_period(mu, L)
    mean = float(iv.mean())
    ep_mean = float(ep.mean()) if ep.size else np.nan
    return RestartReport(iv, ep, mean, ep_mean, float(pred), abs(mean - pred) / pred)


def quadratic_restart_run(mu_ratio=0.01, n=50, iters=1000, seed=0, rho_min=RHO_MIN):
    """Continuation run on ``0.5 ||A x||^2`` with ``A'A`` eigenvalues spread over ``[mu, L]``.

    ``L = 1`` is used as the exact majorizer and ``x0`` is standard normal.
    Returns ``(log, mu, L)``; the log's ``objective`` column holds the cost
    and ``rmsd`` the distance to the minimizer ``0``.
    """
    if not 0 < mu_ratio <= 1:
        raise ValueError("mu_ratio must lie in (0, 1]")
    lams = np.geomspace(mu_ratio, 1.0, n)
    x = np.random.default_rng(seed).standard_normal(n)

    def grad(v):
        return lams * v

    def prox(target, metric, warm):
        return target

    maj = np.ones(n)
    log = ConvergenceLog(name=f"quadratic-mu{mu_ratio:g}")
    state = init_lalm_state(x, grad)
    log.append(0, 0, 1.0, 0, 0.5 * float(lams @ (x * x)), float(np.sqrt(np.mean(x * x))), 0.0)
    for k in range(1, iters + 1):
        rho = continuation_rho(state.l, rho_min)
        state = lalm_step(state, grad, prox, maj, rho)
        fired = state.xi > 0
        state = replace(state, l=0 if fired else state.l + 1)
        xk = state.x
        log.append(k, 1, rho, int(fired), 0.5 * float(lams @ (xk * xk)), float(np.sqrt(np.mean(xk * xk))), 0.0)
    return log, float(mu_ratio), 1.0
