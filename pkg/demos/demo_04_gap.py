"""
Primal-dual gap of averaged iterates
====================================

The linearized AL iterates are a primal-dual method in disguise. With
exact updates the gap of the running averages falls like 1/k, under the
bound C^2 / k set by the distance of the start from the saddle point.
"""

import numpy as np

from oslalm.analysis import gap_run, quadratic_gap_problem, solve_quadratic
from oslalm.solvers import ExactQuadraticProx

problem = quadratic_gap_problem(16)
x_hat = solve_quadratic(problem)
prox = ExactQuadraticProx(problem.reg, problem.grid)

for rho in (1.0, 0.3, 0.05):
    run = gap_run(problem, prox, np.zeros(problem.n), x_hat, rho, 200)
    k = np.array([1, 10, 50, 200])
    print("rho=%-5g gap %s" % (rho, np.array2string(run.gaps[k - 1], precision=3)))
    print("          bound %s" % np.array2string(run.bounds[k - 1], precision=3))
    print("          max gap/bound %.3f" % np.max(run.gaps / run.bounds))
