"""
Damping of one eigencomponent
=============================

On a quadratic, every eigencomponent of the one-subset iterates follows a
second-order recurrence. Its behaviour depends on q = lambda / L and rho:
over-damped for rho above rho_c = 2 sqrt(q (1 - q)), ringing below it.
"""

import numpy as np

from oslalm.analysis import (
    classify_damping,
    critical_rho,
    measured_rate,
    quadratic_restart_run,
    restart_period,
    restart_period_check,
    scalar_recurrence_sim,
)

q = 0.01
rc = critical_rho(q)
print("q = %g, rho_c = %.4f" % (q, rc))
for rho in (1.0, 0.5, rc, 0.05, 0.01):
    rep = classify_damping(q, rho)
    print("rho=%.4f  %-8s  modulus %.5f  measured %.5f" % (rho, rep.regime, rep.modulus, measured_rate(q, rho)))

# the fastest rate is at rho_c; the under-damped case oscillates
x, _ = scalar_recurrence_sim(q, 0.01, 300)
sign_changes = np.count_nonzero(np.diff(np.sign(x)))
print("rho=0.01: %d sign changes in 300 steps" % sign_changes)

# restarts under continuation, on eigenvalues spread over [0.01, 1]
log, mu, L = quadratic_restart_run(mu_ratio=0.01)
rep = restart_period_check(log, mu, L)
print("predicted restart spacing %.1f" % restart_period(mu, L))
print("mean spacing of all restarts %.1f, of burst onsets %.1f" % (rep.mean, rep.episode_mean))
print("first restarts at", log.restart_positions()[:12])
