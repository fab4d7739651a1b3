"""Independent test-only reference implementations.

Everything here is written from the model definitions directly, without
reusing library code paths, so the tests cross-check two independent
derivations of each quantity.
"""

from __future__ import annotations

import numpy as np
from scipy.optimize import minimize


def bayes_update_oracle(b, a, o, theta, q_a, q_u):
    """Two-state Bayes filter by explicit matrix arithmetic.

    ``b`` is the full belief vector (b(s=0), b(s=1)); returns the posterior
    vector.  Raises ZeroDivisionError on a zero-probability observation.
    """
    if a == 0:
        T = np.array([[theta.p_a_d, 1.0 - theta.p_a_d],
                      [theta.p_u_d, 1.0 - theta.p_u_d]])
    else:
        T = np.array([[theta.p_a_n, 1.0 - theta.p_a_n],
                      [theta.p_u_n, 1.0 - theta.p_u_n]])
    O = np.array([[q_a, 1.0 - q_a],
                  [q_u, 1.0 - q_u]])
    predictive = np.asarray(b, dtype=float) @ T
    unnormalized = O[:, o] * predictive
    total = unnormalized.sum()
    if total <= 0.0:
        raise ZeroDivisionError("zero-probability observation")
    return unnormalized / total


def exact_value_oracle(theta, config, tau):
    """Expected discounted cost by direct enumeration of observation
    sequences, carrying the joint distribution P(o_{1:k}, s_k) forward.

    Independent from the library's ``exact_value``: this one iterates a
    work-list of (joint vector, belief, discounted prefix) rather than
    recursing, and recomputes all matrices locally.
    """
    T = [np.array([[theta.p_a_d, 1.0 - theta.p_a_d],
                   [theta.p_u_d, 1.0 - theta.p_u_d]]),
         np.array([[theta.p_a_n, 1.0 - theta.p_a_n],
                   [theta.p_u_n, 1.0 - theta.p_u_n]])]
    O = np.array([[config.q_a, 1.0 - config.q_a],
                  [config.q_u, 1.0 - config.q_u]])
    cost = np.asarray(config.cost, dtype=float)
    rho = config.rho

    # Work items: (probability of this observation history,
    #              state distribution given the history, trust score).
    items = [(1.0, np.array([1.0 - config.b0_legit, config.b0_legit]),
              config.b0_legit)]
    total = 0.0
    for k in range(config.horizon):
        next_items = []
        for prob, state_dist, ts in items:
            if prob == 0.0:
                continue
            action = 1 if tau < ts else 0
            total += prob * (rho ** k) * float(state_dist @ cost[:, action])
            if k == config.horizon - 1:
                continue
            predictive = state_dist @ T[action]
            for obs in (0, 1):
                joint = O[:, obs] * predictive
                p_obs = joint.sum()
                if p_obs == 0.0:
                    continue
                posterior = joint / p_obs
                next_items.append((prob * p_obs, posterior,
                                   float(posterior[1])))
        items = next_items
    return total


def simplex_projection_qp(v):
    """Euclidean projection onto the probability simplex, via a generic
    constrained quadratic solver (SLSQP) instead of the closed form."""
    v = np.asarray(v, dtype=float)
    n = v.size
    clipped = np.maximum(v, 1e-9)
    starts = [np.full(n, 1.0 / n), clipped / clipped.sum()]
    best = None
    for x0 in starts:
        result = minimize(
            lambda x: 0.5 * np.sum((x - v) ** 2),
            x0,
            jac=lambda x: x - v,
            bounds=[(0.0, None)] * n,
            constraints=[{"type": "eq", "fun": lambda x: x.sum() - 1.0,
                          "jac": lambda x: np.ones(n)}],
            method="SLSQP",
            options={"maxiter": 500, "ftol": 1e-16},
        )
        feasible = (result.x >= -1e-9).all() and abs(result.x.sum() - 1.0) < 1e-8
        if feasible and (best is None or result.fun < best.fun):
            best = result
        if result.success and feasible:
            break
    assert best is not None, "SLSQP produced no feasible iterate"
    return np.maximum(best.x, 0.0)


def discounted_costs_replay(theta, config, tau, u0, u):
    """Pure-python replay of the rollout kernel contract: consumes the same
    pre-drawn uniforms in the same order and returns per-path costs."""
    n = u0.shape[0]
    cost = np.asarray(config.cost, dtype=float)
    T = [np.array([[theta.p_a_d, 1.0 - theta.p_a_d],
                   [theta.p_u_d, 1.0 - theta.p_u_d]]),
         np.array([[theta.p_a_n, 1.0 - theta.p_a_n],
                   [theta.p_u_n, 1.0 - theta.p_u_n]])]
    O = np.array([[config.q_a, 1.0 - config.q_a],
                  [config.q_u, 1.0 - config.q_u]])
    out = np.empty(n)
    for i in range(n):
        state = 1 if u0[i] < config.b0_legit else 0
        ts = config.b0_legit
        total = 0.0
        discount = 1.0
        for k in range(config.horizon):
            action = 1 if tau < ts else 0
            total += discount * cost[state, action]
            discount *= config.rho
            if k == config.horizon - 1:
                break
            state = 0 if u[i, k, 0] < T[action][state, 0] else 1
            obs = 0 if u[i, k, 1] < O[state, 0] else 1
            predictive = np.array([1.0 - ts, ts]) @ T[action]
            joint = O[:, obs] * predictive
            ts = float(joint[1] / joint.sum())
        out[i] = total
    return out


def spearman(x, y):
    """Spearman rank correlation (average ranks for ties)."""
    from scipy.stats import spearmanr

    return float(spearmanr(x, y).statistic)
