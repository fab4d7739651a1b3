"""Meta-training of the trust threshold.

Scenario-agnostic mode minimizes the average post-adaptation cost over the
sampled scenario set with first-order SGD on SPSA gradient estimates.
Robust mode additionally runs gradient ascent on the scenario weights
(projected back onto the probability simplex), so training concentrates on
the costliest scenarios.
"""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass
from typing import Callable, Mapping, Optional, Sequence

import numpy as np

from . import seeding
from ._parallel import map_ordered
from .pomdp import PomdpConfig, Scenario, ThresholdPolicy, mc_value_estimate
from .spsa import SpsaSchedule, project_unit_interval, spsa_gradient

#: A (possibly noisy) evaluator of the discounted cost at a threshold.
ValueFn = Callable[[float, Scenario, np.random.Generator], float]

MODES = ("agnostic", "robust")


def simplex_project(v) -> np.ndarray:
    """Euclidean projection onto the probability simplex (sort-and-threshold)."""
    v = np.asarray(v, dtype=float)
    if v.ndim != 1 or v.size < 1:
        raise ValueError("expected a nonempty 1-d vector")
    if not np.isfinite(v).all():
        raise ValueError("vector entries must be finite")
    u = np.sort(v)[::-1]
    cumulative = np.cumsum(u)
    ks = np.arange(1, v.size + 1)
    positive = u - (cumulative - 1.0) / ks > 0.0
    k = int(ks[positive][-1])
    threshold = (cumulative[k - 1] - 1.0) / k
    return np.maximum(v - threshold, 0.0)


def sga_step(weights, values: Mapping[int, float], beta: float) -> np.ndarray:
    """Ascent step on scenario weights: add beta * value for each evaluated
    scenario index, then project back onto the simplex."""
    w = np.asarray(weights, dtype=float).copy()
    for index, value in values.items():
        w[index] += beta * value
    return simplex_project(w)


@dataclass(frozen=True)
class ScenarioSet:
    """Finite ordered collection of training (or test) scenarios."""

    scenarios: tuple
    provenance: str = ""

    def __post_init__(self) -> None:
        scenarios = tuple(self.scenarios)
        if not scenarios:
            raise ValueError("scenario set must be nonempty")
        for i, theta in enumerate(scenarios):
            if not theta.in_threshold_regime():
                raise ValueError(
                    f"scenario {i} violates the threshold-regime bound: {theta}")
        object.__setattr__(self, "scenarios", scenarios)

    def __len__(self) -> int:
        return len(self.scenarios)

    def __getitem__(self, i: int) -> Scenario:
        return self.scenarios[i]

    def __iter__(self):
        return iter(self.scenarios)


@dataclass(frozen=True, eq=False)
class HistoryEntry:
    t: int
    tau_meta: float
    stop_metric: float
    batch_indices: tuple
    pre_grads: tuple
    post_grads: tuple
    taus_adapted: tuple


@dataclass(frozen=True, eq=False)
class MetaTrainerState:
    tau_meta: float
    t: int
    weights: np.ndarray
    mode: str
    schedule: SpsaSchedule
    master_seed: int
    history: tuple = ()

    def __post_init__(self) -> None:
        if self.mode not in MODES:
            raise ValueError(f"mode must be one of {MODES}, got {self.mode!r}")
        if not 0.0 <= self.tau_meta <= 1.0:
            raise ValueError(f"tau_meta must be in [0, 1], got {self.tau_meta}")
        w = np.asarray(self.weights, dtype=float)
        if (w < 0.0).any() or abs(w.sum() - 1.0) > 1e-9:
            raise ValueError("weights must lie on the probability simplex")
        object.__setattr__(self, "weights", w)


@dataclass(frozen=True)
class TrainResult:
    tau_meta: float
    state: MetaTrainerState
    converged: bool


def mc_objective(config: PomdpConfig, n_rollouts: int = 100) -> ValueFn:
    """Default evaluator: Monte Carlo mean of the discounted cost."""

    def value(tau: float, theta: Scenario, rng: np.random.Generator) -> float:
        mean, _ = mc_value_estimate(theta, config, ThresholdPolicy(tau),
                                    n_rollouts, rng)
        return mean

    return value


def adapt(tau: float, theta: Scenario, config: PomdpConfig, eta: float,
          gamma: float, rng: np.random.Generator, n_rollouts: int = 100,
          value_fn: Optional[ValueFn] = None):
    """One projected gradient step at ``tau`` for scenario ``theta``.

    Returns (adapted threshold, the SPSA gradient estimate used).
    """
    if gamma <= 0.0:
        raise ValueError(f"gamma must be > 0, got {gamma}")
    value_fn = value_fn or mc_objective(config, n_rollouts)
    grad = spsa_gradient(lambda x: value_fn(x, theta, rng), tau, eta, rng)
    return project_unit_interval(tau - gamma * grad), grad


def foml_step(state: MetaTrainerState, batch: Sequence[Scenario],
              config: PomdpConfig, rng: np.random.Generator,
              n_rollouts: int = 100, value_fn: Optional[ValueFn] = None,
              batch_indices: Optional[Sequence[int]] = None,
              jobs: int = 1) -> MetaTrainerState:
    """One first-order meta-update over a scenario batch.

    Per scenario: estimate the gradient at the meta threshold, take the
    adaptation step, estimate the gradient again at the adapted threshold.
    The meta threshold then descends along the average post-adaptation
    gradient (the Hessian term of the full meta-gradient is dropped).
    Per-scenario work items are independent (each owns a spawned random
    sub-stream) and may run on up to ``jobs`` workers.
    """
    if not batch:
        raise ValueError("batch must be nonempty")
    value_fn = value_fn or mc_objective(config, n_rollouts)
    schedule = state.schedule
    t = state.t
    eta = schedule.eta(t)
    alpha = schedule.alpha(t)
    gamma = schedule.gamma

    def per_scenario(item):
        theta, scenario_rng = item
        tau_theta, g_pre = adapt(state.tau_meta, theta, config, eta, gamma,
                                 scenario_rng, value_fn=value_fn)
        g_post = spsa_gradient(lambda x: value_fn(x, theta, scenario_rng),
                               tau_theta, eta, scenario_rng)
        return g_pre, g_post, tau_theta

    results = map_ordered(per_scenario,
                          list(zip(batch, rng.spawn(len(batch)))), jobs)
    pre_grads = [r[0] for r in results]
    post_grads = [r[1] for r in results]
    taus_adapted = [r[2] for r in results]

    tau_new = project_unit_interval(
        state.tau_meta - alpha * float(np.mean(post_grads)))
    entry = HistoryEntry(
        t=t,
        tau_meta=tau_new,
        stop_metric=float(np.max(np.abs(pre_grads))),
        batch_indices=tuple(batch_indices) if batch_indices is not None else (),
        pre_grads=tuple(pre_grads),
        post_grads=tuple(post_grads),
        taus_adapted=tuple(taus_adapted),
    )
    return dataclasses.replace(state, tau_meta=tau_new, t=t + 1,
                               history=state.history + (entry,))


def initial_state(scenario_set: ScenarioSet, schedule: SpsaSchedule,
                  mode: str, master_seed: int,
                  tau_init: float = 0.5) -> MetaTrainerState:
    n = len(scenario_set)
    return MetaTrainerState(
        tau_meta=tau_init, t=1, weights=np.full(n, 1.0 / n), mode=mode,
        schedule=schedule, master_seed=master_seed)


def train(scenario_set: ScenarioSet, config: PomdpConfig,
          schedule: SpsaSchedule, mode: str = "agnostic",
          batch_size: int = 10, max_iters: int = 2000, master_seed: int = 0,
          n_rollouts: int = 100, stop_window: int = 3, tau_init: float = 0.5,
          value_fn: Optional[ValueFn] = None, jobs: int = 1) -> TrainResult:
    """Run the meta-training loop until the stopping rule fires or
    ``max_iters`` is reached.

    The stopping rule requires every pre-adaptation gradient magnitude in
    the batch to fall below the schedule tolerance, on ``stop_window``
    consecutive iterations (window of 1 recovers the bare rule).  When the
    iteration cap is hit first, the result carries ``converged=False``.
    """
    if mode not in MODES:
        raise ValueError(f"mode must be one of {MODES}, got {mode!r}")
    if batch_size < 1 or batch_size > len(scenario_set):
        raise ValueError("batch_size must be in [1, |scenario_set|]")
    if stop_window < 1:
        raise ValueError("stop_window must be >= 1")
    value_fn = value_fn or mc_objective(config, n_rollouts)

    state = initial_state(scenario_set, schedule, mode, master_seed, tau_init)
    n = len(scenario_set)
    consecutive = 0
    converged = False
    for t in range(1, max_iters + 1):
        batch_rng = seeding.derived_rng(master_seed, seeding.TRAINING, t, 0)
        step_rng = seeding.derived_rng(master_seed, seeding.TRAINING, t, 1)
        value_rng = seeding.derived_rng(master_seed, seeding.TRAINING, t, 2)

        p = state.weights if mode == "robust" else None
        indices = batch_rng.choice(n, size=batch_size, replace=True, p=p)
        batch = [scenario_set[i] for i in indices]
        state = foml_step(state, batch, config, step_rng,
                          value_fn=value_fn, batch_indices=indices, jobs=jobs)
        entry = state.history[-1]

        if mode == "robust":
            # Average the adapted-threshold values over duplicate draws, then
            # ascend the weights of the scenarios seen this iteration.
            sums: dict = {}
            counts: dict = {}
            streams = value_rng.spawn(len(indices))
            for i, tau_theta, stream in zip(indices, entry.taus_adapted, streams):
                i = int(i)
                sums[i] = sums.get(i, 0.0) + value_fn(
                    tau_theta, scenario_set[i], stream)
                counts[i] = counts.get(i, 0) + 1
            values = {i: sums[i] / counts[i] for i in sums}
            weights = sga_step(state.weights, values, schedule.beta(t))
            state = dataclasses.replace(state, weights=weights)

        if entry.stop_metric <= schedule.epsilon:
            consecutive += 1
            if consecutive >= stop_window:
                converged = True
                break
        else:
            consecutive = 0

    return TrainResult(tau_meta=state.tau_meta, state=state, converged=converged)
