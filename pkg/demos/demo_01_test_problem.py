"""
The desk-scale test problem
===========================

Simulate a low-dose parallel-beam scan of the body phantom, look at the
statistical weights, and build the converged reference that every
convergence curve is measured against.
"""

import numpy as np

from oslalm.ct import rms_diff
from oslalm.experiment import load_config, simulate, build_case

cfg = load_config()
print("grid", cfg.grid.shape, "pixel", cfg.grid.pixel_size)
print("views", cfg.geometry.n_views, "bins", cfg.geometry.n_bins)

x_true, A, y, W = simulate(cfg)
print("system matrix", A.shape, "nnz", A.nnz)

# weights are detected counts: rays through the body see far fewer photons
w = W.diag
print("weights min %.0f  max %.0f  ratio %.1f" % (w.min(), w.max(), w.max() / w.min()))

# the dynamic range only grows with dose once the one-count floor clips
for I0 in (1e3, 1e6):
    dense = load_config(overrides=["phantom.water=1.0", f"noise.I0={I0}"])
    wd = simulate(dense)[3].diag
    print("dense object, I0=%.0e: weight ratio %.0f" % (I0, wd.max() / wd.min()))

# FBP is the starting image, the reference is a long restarted FISTA run
case = build_case(cfg, A, y, W, x_true)
g = cfg.grid
print("FBP       rms vs phantom %.4f" % rms_diff(case.x0, x_true, g))
print("reference rms vs phantom %.4f" % rms_diff(case.problem.x_ref, x_true, g))
print("threshold (1%% of range)  %.4f" % case.threshold)

try:
    import matplotlib.pyplot as plt
except ImportError:
    plt = None
if plt is not None:
    fig, ax = plt.subplots(1, 3, figsize=(10, 3.4))
    for a, img, title in zip(ax, (x_true, case.x0, case.problem.x_ref), ("phantom", "FBP", "reference")):
        a.imshow(img.reshape(g.shape), origin="lower", cmap="gray", vmin=0.1, vmax=0.3)
        a.set_title(title)
        a.axis("off")
    fig.tight_layout()
    fig.savefig("test_problem.png")
    print("wrote test_problem.png")
