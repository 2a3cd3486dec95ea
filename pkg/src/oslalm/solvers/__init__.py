"""Linearized AL solvers, baselines and the reconstruction driver."""

from .baselines import (
    MomentumState,
    fista_reference,
    init_momentum_state,
    ista_step,
    os_nes05_epoch,
    os_rnes05_epoch,
    os_sqs_epoch,
    sqs_diag,
)
from .driver import ALGORITHMS, SolverOptions, make_prox, majorizer_diag, run_reconstruction
from .lalm import (
    RHO_MIN,
    SolverState,
    continuation_rho,
    full_lalm_step,
    init_full_state,
    init_lalm_state,
    lalm_step,
    oslalm_epoch,
    restart_indicator,
    u_update_quadratic,
)
from .log import COLUMNS, ConvergenceLog, LogRow
from .problem import ObjectiveValue, Problem, SubsetData, objective
from .prox import ExactQuadraticProx, FistaProx, inner_denoise, laplacian
