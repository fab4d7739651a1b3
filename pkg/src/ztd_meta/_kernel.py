"""Numba-compiled rollout kernel.

Kept free of model classes so the hot loop stays scalar.  Uniform draws are
taken from pre-generated arrays: ``u0[i]`` picks the initial state of
rollout ``i`` and ``u[i, k, 0]``/``u[i, k, 1]`` drive the state transition
and observation at step ``k``.  A zero-probability observation marks the
rollout cost as NaN; callers translate that into an error.
"""

import numpy as np
from numba import njit


@njit(cache=True)
def discounted_cost_batch(p_a_d, p_u_d, p_a_n, p_u_n, q_a, q_u,
                          c00, c01, c10, c11, rho, horizon, b0, tau,
                          u0, u):
    n = u0.shape[0]
    out = np.empty(n)
    for i in range(n):
        s = 1 if u0[i] < b0 else 0
        ts = b0
        total = 0.0
        disc = 1.0
        failed = False
        for k in range(horizon):
            a = 1 if tau < ts else 0
            if s == 0:
                total += disc * (c01 if a == 1 else c00)
            else:
                total += disc * (c11 if a == 1 else c10)
            disc *= rho
            if k == horizon - 1:
                break
            if a == 0:
                t00 = p_a_d
                t10 = p_u_d
            else:
                t00 = p_a_n
                t10 = p_u_n
            p_next0 = t00 if s == 0 else t10
            s = 0 if u[i, k, 0] < p_next0 else 1
            alert_p = q_a if s == 0 else q_u
            o = 0 if u[i, k, 1] < alert_p else 1
            pred0 = (1.0 - ts) * t00 + ts * t10
            pred1 = 1.0 - pred0
            if o == 0:
                l0 = q_a
                l1 = q_u
            else:
                l0 = 1.0 - q_a
                l1 = 1.0 - q_u
            den = l0 * pred0 + l1 * pred1
            if den <= 0.0:
                out[i] = np.nan
                failed = True
                break
            ts = l1 * pred1 / den
        if not failed:
            out[i] = total
    return out
