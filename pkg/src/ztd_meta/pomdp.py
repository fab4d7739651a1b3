"""Two-state account-takeover POMDP: model types, Bayesian trust filter,
threshold policies, stochastic rollouts and value estimation.

State 0 is an adversarial account, state 1 a legitimate one.  Action 0
resets the account credentials, action 1 leaves it alone.  Observation 0
is an intrusion alert, observation 1 is silence.
"""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass
from typing import Optional

import numpy as np

from ._kernel import discounted_cost_batch


class ZeroLikelihood(ValueError):
    """The received observation has probability zero under the model."""


class HorizonTooLarge(ValueError):
    """Exact path enumeration would exceed the configured budget."""


def _check_prob(name: str, value: float) -> None:
    if not 0.0 <= value <= 1.0:
        raise ValueError(f"{name} must be in [0, 1], got {value}")


@dataclass(frozen=True)
class Scenario:
    """Attack scenario: the four transition probabilities of the POMDP.

    p_a_d: attacker keeps its foothold despite a reset.
    p_u_d: legitimate account gets compromised during a reset.
    p_a_n: attacker persists undetected under normal operation (stealthiness).
    p_u_n: legitimate account is taken over under normal operation (vulnerability).
    """

    p_a_d: float
    p_u_d: float
    p_a_n: float
    p_u_n: float

    def __post_init__(self) -> None:
        for name in ("p_a_d", "p_u_d", "p_a_n", "p_u_n"):
            _check_prob(name, getattr(self, name))

    def in_threshold_regime(self, tol: float = 1e-12) -> bool:
        """Whether the parameters admit an optimal threshold policy:
        p_u_n <= min(p_a_n, p_a_n - p_a_d + p_u_d)."""
        bound = min(self.p_a_n, self.p_a_n - self.p_a_d + self.p_u_d)
        return self.p_u_n <= bound + tol

    def as_array(self) -> np.ndarray:
        return np.array([self.p_a_d, self.p_u_d, self.p_a_n, self.p_u_n])

    @classmethod
    def from_array(cls, values) -> "Scenario":
        p_a_d, p_u_d, p_a_n, p_u_n = (float(v) for v in values)
        return cls(p_a_d, p_u_d, p_a_n, p_u_n)

    def replace(self, **kwargs) -> "Scenario":
        return dataclasses.replace(self, **kwargs)


#: Baseline scenario used throughout the experiments.
BASELINE_SCENARIO = Scenario(p_a_d=0.2, p_u_d=0.1, p_a_n=0.8, p_u_n=0.5)


@dataclass(frozen=True)
class PomdpConfig:
    """Fixed (scenario-independent) part of the model.

    cost[s][a] is the defender's per-step cost of taking action ``a`` while
    the account is in state ``s``.
    """

    q_a: float = 0.9
    q_u: float = 0.1
    cost: tuple = ((10.0, 15.0), (3.0, 0.0))
    rho: float = 0.86
    horizon: int = 100
    b0_legit: float = 0.5

    def __post_init__(self) -> None:
        _check_prob("q_a", self.q_a)
        _check_prob("q_u", self.q_u)
        _check_prob("b0_legit", self.b0_legit)
        if not 0.0 < self.rho < 1.0:
            raise ValueError(f"rho must be in (0, 1), got {self.rho}")
        if self.horizon < 1:
            raise ValueError(f"horizon must be >= 1, got {self.horizon}")
        cost = tuple(tuple(float(c) for c in row) for row in self.cost)
        if len(cost) != 2 or any(len(row) != 2 for row in cost):
            raise ValueError("cost must be a 2x2 matrix")
        if not all(np.isfinite(c) for row in cost for c in row):
            raise ValueError("cost entries must be finite")
        object.__setattr__(self, "cost", cost)

    def cost_array(self) -> np.ndarray:
        return np.array(self.cost)

    def replace(self, **kwargs) -> "PomdpConfig":
        return dataclasses.replace(self, **kwargs)


#: Baseline configuration used throughout the experiments.
BASELINE_CONFIG = PomdpConfig()


@dataclass(frozen=True)
class Belief:
    """Defender's belief, summarized by the trust score b(s=1)."""

    ts: float

    def __post_init__(self) -> None:
        _check_prob("ts", self.ts)

    def as_array(self) -> np.ndarray:
        return np.array([1.0 - self.ts, self.ts])


@dataclass(frozen=True)
class ThresholdPolicy:
    """Reset the account (action 0) whenever the trust score is <= tau."""

    tau: float

    def __post_init__(self) -> None:
        _check_prob("tau", self.tau)


@dataclass(frozen=True)
class RolloutRecord:
    discounted_cost: float
    trajectory: Optional[tuple] = None


def transition_matrix(theta: Scenario, a: int) -> np.ndarray:
    """Row-stochastic state transition matrix under action ``a``."""
    if a == 0:
        return np.array([[theta.p_a_d, 1.0 - theta.p_a_d],
                         [theta.p_u_d, 1.0 - theta.p_u_d]])
    if a == 1:
        return np.array([[theta.p_a_n, 1.0 - theta.p_a_n],
                         [theta.p_u_n, 1.0 - theta.p_u_n]])
    raise ValueError(f"action must be 0 or 1, got {a}")


def observation_matrix(config: PomdpConfig) -> np.ndarray:
    """Row-stochastic observation matrix (action-independent)."""
    return np.array([[config.q_a, 1.0 - config.q_a],
                     [config.q_u, 1.0 - config.q_u]])


def belief_update(b: Belief, a: int, o: int, theta: Scenario,
                  config: PomdpConfig) -> Belief:
    """One Bayesian filter step: predict through T(a), correct by O[:, o]."""
    if o not in (0, 1):
        raise ValueError(f"observation must be 0 or 1, got {o}")
    trans = transition_matrix(theta, a)
    obs = observation_matrix(config)
    pred = b.as_array() @ trans
    post = obs[:, o] * pred
    den = post.sum()
    if den <= 0.0:
        raise ZeroLikelihood(
            f"observation {o} has zero probability under the predictive belief")
    return Belief(ts=float(post[1] / den))


def policy_act(pi: ThresholdPolicy, ts: float) -> int:
    """1 (leave alone) iff tau < ts, else 0 (reset)."""
    return 1 if pi.tau < ts else 0


def rollout(theta: Scenario, config: PomdpConfig, pi: ThresholdPolicy,
            rng: np.random.Generator,
            record_trajectory: bool = False) -> RolloutRecord:
    """Sample one trajectory of length ``config.horizon``.

    The initial state is drawn from the initial belief.  Uniform draws are
    consumed in the order (initial state, transition, observation) so that a
    single-rollout Monte Carlo estimate reproduces this function exactly.
    """
    horizon = config.horizon
    u0 = rng.random()
    u = rng.random((horizon - 1, 2)) if horizon > 1 else np.empty((0, 2))

    s = 1 if u0 < config.b0_legit else 0
    belief = Belief(ts=config.b0_legit)
    total = 0.0
    disc = 1.0
    steps = [] if record_trajectory else None
    for k in range(horizon):
        a = policy_act(pi, belief.ts)
        total += disc * config.cost[s][a]
        disc *= config.rho
        if record_trajectory:
            steps.append((s, a, None, belief.ts))
        if k == horizon - 1:
            break
        trans = transition_matrix(theta, a)
        s_next = 0 if u[k, 0] < trans[s, 0] else 1
        alert_p = config.q_a if s_next == 0 else config.q_u
        o = 0 if u[k, 1] < alert_p else 1
        belief = belief_update(belief, a, o, theta, config)
        if record_trajectory:
            steps[-1] = (steps[-1][0], steps[-1][1], o, steps[-1][3])
        s = s_next
    trajectory = tuple(steps) if record_trajectory else None
    return RolloutRecord(discounted_cost=total, trajectory=trajectory)


def batch_discounted_costs(theta: Scenario, config: PomdpConfig, tau: float,
                           u0: np.ndarray, u: np.ndarray) -> np.ndarray:
    """Vectorized rollout costs for pre-drawn uniforms (common random numbers)."""
    costs = discounted_cost_batch(
        theta.p_a_d, theta.p_u_d, theta.p_a_n, theta.p_u_n,
        config.q_a, config.q_u,
        config.cost[0][0], config.cost[0][1],
        config.cost[1][0], config.cost[1][1],
        config.rho, config.horizon, config.b0_legit, float(tau), u0, u)
    if np.isnan(costs).any():
        raise ZeroLikelihood(
            "an observation with zero predictive probability occurred")
    return costs


def draw_rollout_uniforms(config: PomdpConfig, n: int,
                          rng: np.random.Generator):
    """Uniform variates feeding ``batch_discounted_costs`` for n rollouts."""
    u0 = rng.random(n)
    steps = max(config.horizon - 1, 0)
    u = rng.random((n, steps, 2))
    return u0, u


def mc_value_estimate(theta: Scenario, config: PomdpConfig,
                      pi: ThresholdPolicy, n_rollouts: int,
                      rng: np.random.Generator):
    """Monte Carlo estimate of the expected discounted cost.

    Returns (mean, standard error of the mean).
    """
    if n_rollouts < 1:
        raise ValueError(f"n_rollouts must be >= 1, got {n_rollouts}")
    u0, u = draw_rollout_uniforms(config, n_rollouts, rng)
    costs = batch_discounted_costs(theta, config, pi.tau, u0, u)
    mean = float(costs.mean())
    if n_rollouts == 1:
        return mean, 0.0
    sem = float(costs.std(ddof=1) / np.sqrt(n_rollouts))
    return mean, sem


def exact_value(theta: Scenario, config: PomdpConfig, pi: ThresholdPolicy,
                horizon: int, max_paths: int = 2 ** 24) -> float:
    """Exact expected discounted cost over a small horizon.

    Enumerates every observation sequence, carrying the joint probability of
    (observation history, current state); the trust score along a branch is
    the normalized joint, so the policy is replayed exactly.
    """
    if horizon < 1:
        raise ValueError(f"horizon must be >= 1, got {horizon}")
    if 4 ** horizon > max_paths:
        raise HorizonTooLarge(
            f"horizon {horizon} needs {4 ** horizon} paths, budget {max_paths}")
    cost = config.cost
    rho = config.rho
    obs = observation_matrix(config)

    def recurse(k: int, w0: float, w1: float) -> float:
        ts = w1 / (w0 + w1)
        a = policy_act(pi, ts)
        acc = rho ** k * (w0 * cost[0][a] + w1 * cost[1][a])
        if k == horizon - 1:
            return acc
        trans = transition_matrix(theta, a)
        q0 = w0 * trans[0, 0] + w1 * trans[1, 0]
        q1 = w0 * trans[0, 1] + w1 * trans[1, 1]
        for o in (0, 1):
            v0 = obs[0, o] * q0
            v1 = obs[1, o] * q1
            if v0 + v1 > 0.0:
                acc += recurse(k + 1, v0, v1)
        return acc

    return recurse(0, 1.0 - config.b0_legit, config.b0_legit)
