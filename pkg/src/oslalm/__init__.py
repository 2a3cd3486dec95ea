"""Ordered-subsets linearized augmented Lagrangian reconstruction for PWLS CT.

Subpackages and modules:

``linalg``       sparse/diagonal operators and the spectral bound
``ct``           2-D parallel-beam geometry, phantoms, noise and subsets
``regularizer``  edge-preserving roughness penalty and box constraint
``majorizer``    scalar, diagonal and Barzilai-Borwein scaled majorizers
``solvers``      OS-LALM, its unsimplified form and the baselines
``analysis``     damping, gap and restart diagnostics
``experiment``   YAML configs and the standard test problem
``fileio``       raw float32 arrays, sidecars and PGM export
``cli``          the ``oslalm`` command
"""

from .ct import Geometry, ImageGrid, build_system_matrix, default_phantom, fbp, synthesize_weights
from .regularizer import BoxConstraint, Potential, RegularizerConfig
from .solvers import ConvergenceLog, Problem, SolverOptions, run_reconstruction

__version__ = "0.1.0"

__all__ = [
    "Geometry",
    "ImageGrid",
    "build_system_matrix",
    "default_phantom",
    "fbp",
    "synthesize_weights",
    "BoxConstraint",
    "Potential",
    "RegularizerConfig",
    "ConvergenceLog",
    "Problem",
    "SolverOptions",
    "run_reconstruction",
]
