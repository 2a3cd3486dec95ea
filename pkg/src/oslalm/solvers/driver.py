"""Algorithm dispatch and convergence logging."""

from __future__ import annotations

import time
from dataclasses import dataclass

import numpy as np

from ..majorizer import compute_Ldiag
from ..linalg import spectral_bound
from .baselines import (
    init_momentum_state,
    ista_step,
    os_rnes05_epoch,
    os_sqs_epoch,
    sqs_diag,
    fista_reference,
)
from .lalm import RHO_MIN, continuation_rho, init_lalm_state, oslalm_epoch
from .log import ConvergenceLog
from .prox import ExactQuadraticProx, FistaProx

__all__ = ["ALGORITHMS", "SolverOptions", "run_reconstruction", "make_prox", "majorizer_diag"]

ALGORITHMS = ("os-lalm", "ista", "os-sqs", "os-nes05", "os-rnes05", "fista")


@dataclass(frozen=True)
class SolverOptions:
    algorithm: str = "os-lalm"
    mode: str = "fixed-rho"
    rho: float = 1.0
    rho_min: float = RHO_MIN
    M: int = 1
    n_inner: int = 1
    max_epochs: int = 30
    majorizer: str = "diagonal"
    bb: bool = False
    gamma: float = 0.0
    prox: str = "fista"
    seed: int = 0
    log_objective: bool = True
    timing: bool = True

    def __post_init__(self):
        if self.algorithm not in ALGORITHMS:
            raise ValueError(f"unknown algorithm {self.algorithm!r}; choose from {ALGORITHMS}")
        if self.mode not in ("fixed-rho", "continuation"):
            raise ValueError(f"unknown mode {self.mode!r}")
        if not 0 < self.rho <= 1:
            raise ValueError("rho must lie in (0, 1]")
        if not 0 < self.rho_min <= 1:
            raise ValueError("rho_min must lie in (0, 1]")
        if self.n_inner < 1 or self.M < 1 or self.max_epochs < 0:
            raise ValueError("n_inner and M must be >= 1 and max_epochs >= 0")
        if self.majorizer not in ("diagonal", "scalar"):
            raise ValueError(f"unknown majorizer {self.majorizer!r}")
        if self.bb and self.majorizer != "diagonal":
            raise ValueError("Barzilai-Borwein scaling needs the diagonal majorizer")
        if self.bb and self.algorithm != "os-lalm":
            raise ValueError("Barzilai-Borwein scaling is only available for os-lalm")
        if self.gamma < 0:
            raise ValueError("gamma must be >= 0")
        if self.prox not in ("fista", "exact"):
            raise ValueError(f"unknown prox {self.prox!r}")
        if self.algorithm in ("ista", "fista") and self.M != 1:
            raise ValueError(f"{self.algorithm} is a one-subset method")

    @property
    def label(self):
        a = self.algorithm
        if a == "os-lalm":
            r = "c" if self.mode == "continuation" else f"{self.rho:g}"
            base = f"OS-LALM-{self.M}-{r}-{self.n_inner}"
            return base + "-bb" if self.bb else base
        if a == "os-sqs":
            return f"OS-SQS-{self.M}"
        if a == "os-nes05":
            return f"OS-Nes05-{self.M}"
        if a == "os-rnes05":
            return f"OS-rNes05-{self.M}-{self.gamma:g}"
        return a.upper()


def majorizer_diag(problem, kind):
    if kind == "scalar":
        return np.full(problem.n, spectral_bound(problem.A, problem.W))
    return compute_Ldiag(problem.A, problem.W).diag


def make_prox(problem, options):
    if options.prox == "exact":
        if problem.box is not None:
            raise ValueError("exact prox does not support a box constraint")
        return ExactQuadraticProx(problem.reg, problem.grid)
    return FistaProx(problem.reg, problem.grid, problem.box, options.n_inner)


def run_reconstruction(problem, options, x0=None):
    """Run ``options.max_epochs`` epochs of the chosen algorithm.

    Returns the final image and a :class:`ConvergenceLog` with one row for
    the initial image and one per inner (subset) update.
    """
    x = np.zeros(problem.n) if x0 is None else np.asarray(x0, dtype=np.float64).copy()
    log = ConvergenceLog(name=options.label)
    t0 = time.perf_counter()

    def record(xk, epoch, inner, rho, restarted):
        obj = problem.objective(xk).value if options.log_objective else np.nan
        secs = time.perf_counter() - t0 if options.timing else 0.0
        log.append(epoch, inner, float(rho), int(bool(restarted)), float(obj), problem.rmsd(xk), secs)

    record(x, 0, 0, options.rho if options.mode == "fixed-rho" else 1.0, False)
    if options.max_epochs == 0:
        return x, log

    algo, M = options.algorithm, options.M
    if algo == "os-lalm":
        return _run_oslalm(problem, options, x, record), log
    if algo == "ista":
        maj = majorizer_diag(problem, options.majorizer)
        prox = make_prox(problem, options)
        for e in range(1, options.max_epochs + 1):
            x = ista_step(x, problem, prox, maj)
            record(x, e, 1, 1.0, False)
        return x, log
    if algo == "fista":
        x = fista_reference(
            problem, options.max_epochs, x0=x, callback=lambda it, xk: record(xk, it + 1, 1, 1.0, False)
        )
        return x, log
    D = sqs_diag(problem, compute_Ldiag(problem.A, problem.W).diag)
    if algo == "os-sqs":
        for e in range(1, options.max_epochs + 1):
            it = iter(range(1, M + 1))
            x = os_sqs_epoch(x, problem, M, D, lambda xk: record(xk, e, next(it), 1.0, False))
        return x, log
    gamma = options.gamma if algo == "os-rnes05" else 0.0
    st = init_momentum_state(x)
    for e in range(1, options.max_epochs + 1):
        it = iter(range(1, M + 1))
        st = os_rnes05_epoch(st, problem, M, D, gamma, lambda xk: record(xk, e, next(it), 1.0, False))
    return st.x, log


def _run_oslalm(problem, options, x, record):
    M = options.M
    subsets = problem.subsets(M)
    order = problem.visit_order(M)
    maj = majorizer_diag(problem, options.majorizer)
    prox = make_prox(problem, options)
    if options.mode == "continuation":

        def schedule(st):
            return continuation_rho(st.l, options.rho_min)

    else:

        def schedule(st):
            return options.rho

    state = init_lalm_state(x, subsets[order[0]].grad)
    for e in range(1, options.max_epochs + 1):

        def cb(st, e=e):
            record(st.x, e, st.inner, st.rho, st.restarted)

        state = oslalm_epoch(state, subsets, order, prox, maj, schedule, cb, bb=options.bb)
    return state.x
