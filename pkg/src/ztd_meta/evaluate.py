"""Evaluation harness: single-scenario optimal thresholds, the
distribution-average baseline, seed-replicated policy comparisons, one-shot
adaptation sweeps and worst-case reports."""

from __future__ import annotations

import dataclasses
import hashlib
import json
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from . import seeding
from ._parallel import map_ordered
from .meta import ScenarioSet, adapt, mc_objective
from .pomdp import (PomdpConfig, Scenario, batch_discounted_costs,
                    draw_rollout_uniforms)
from .scenarios import ScenarioDistribution
from .spsa import SpsaSchedule


def config_digest(config: PomdpConfig) -> str:
    payload = json.dumps(dataclasses.asdict(config), sort_keys=True)
    return hashlib.sha256(payload.encode()).hexdigest()[:16]


@dataclass(frozen=True)
class PolicyRow:
    label: str
    mean_cost: float
    std_dev: float
    n_seeds: int
    n_test_scenarios: int


@dataclass(frozen=True)
class ScenarioDetail:
    label: str
    scenario: Scenario
    tau: float
    cost: float


@dataclass(frozen=True)
class EvaluationReport:
    rows: tuple
    detail: tuple
    provenance: dict

    def row(self, label: str) -> PolicyRow:
        for row in self.rows:
            if row.label == label:
                return row
        raise KeyError(label)


def optimal_threshold(theta: Scenario, config: PomdpConfig,
                      grid_step: float = 0.01, n_rollouts: int = 100,
                      rng: Optional[np.random.Generator] = None):
    """Grid search for the cost-minimizing threshold of one scenario.

    All grid points share one set of rollout uniforms (common random
    numbers), so comparisons are noise-free up to policy-induced path
    divergence.  One refinement pass at grid_step/10 runs around the coarse
    incumbent; ties break toward the smaller threshold.
    """
    if not 0.0 < grid_step <= 0.1:
        raise ValueError(f"grid_step must be in (0, 0.1], got {grid_step}")
    rng = rng if rng is not None else np.random.default_rng(0)
    u0, u = draw_rollout_uniforms(config, n_rollouts, rng)

    def value(tau: float) -> float:
        return float(batch_discounted_costs(theta, config, tau, u0, u).mean())

    def best_of(taus) -> tuple:
        costs = [value(t) for t in taus]
        i = int(np.argmin(costs))  # argmin takes the first, i.e. smallest tau
        return taus[i], costs[i]

    coarse = np.round(np.arange(0.0, 1.0 + grid_step / 2.0, grid_step), 12)
    coarse = np.clip(coarse, 0.0, 1.0)
    tau_star, _ = best_of(list(coarse))
    fine_step = grid_step / 10.0
    fine = np.round(np.arange(max(0.0, tau_star - grid_step),
                              min(1.0, tau_star + grid_step) + fine_step / 2.0,
                              fine_step), 12)
    fine = np.clip(fine, 0.0, 1.0)
    tau_star, cost = best_of(list(fine))
    return float(tau_star), float(cost)


def avg_baseline_threshold(dist: ScenarioDistribution, config: PomdpConfig,
                           grid_step: float = 0.01, n_rollouts: int = 100,
                           rng: Optional[np.random.Generator] = None) -> float:
    """Optimal single-scenario threshold at the distribution-mean scenario."""
    tau_avg, _ = optimal_threshold(dist.mean_scenario(), config,
                                   grid_step=grid_step, n_rollouts=n_rollouts,
                                   rng=rng)
    return tau_avg


def sampled_baseline_threshold(scenario_set, config: PomdpConfig,
                               grid_step: float = 0.01, n_rollouts: int = 100,
                               rng: Optional[np.random.Generator] = None):
    """Optional second baseline: the single threshold minimizing the average
    cost over a sampled scenario set (rather than the cost at the mean
    scenario).  Same grid search, common random numbers shared across both
    grid points and scenarios; ties break toward the smaller threshold.
    """
    if not 0.0 < grid_step <= 0.1:
        raise ValueError(f"grid_step must be in (0, 0.1], got {grid_step}")
    rng = rng if rng is not None else np.random.default_rng(0)
    u0, u = draw_rollout_uniforms(config, n_rollouts, rng)

    def value(tau: float) -> float:
        return float(np.mean([
            batch_discounted_costs(theta, config, tau, u0, u).mean()
            for theta in scenario_set]))

    def best_of(taus) -> tuple:
        costs = [value(t) for t in taus]
        i = int(np.argmin(costs))
        return taus[i], costs[i]

    coarse = np.clip(np.round(np.arange(0.0, 1.0 + grid_step / 2.0,
                                        grid_step), 12), 0.0, 1.0)
    tau_star, _ = best_of(list(coarse))
    fine_step = grid_step / 10.0
    fine = np.clip(np.round(np.arange(
        max(0.0, tau_star - grid_step),
        min(1.0, tau_star + grid_step) + fine_step / 2.0, fine_step), 12),
        0.0, 1.0)
    tau_star, cost = best_of(list(fine))
    return float(tau_star), float(cost)


def evaluate_policies(tau_meta: float, tau_avg: float, test_set: ScenarioSet,
                      config: PomdpConfig, schedule: SpsaSchedule,
                      n_seeds: int, master_seed: int = 0,
                      n_rollouts: int = 100, jobs: int = 1) -> EvaluationReport:
    """Compare the one-shot-adapted meta policy with the fixed
    distribution-average policy over a held-out scenario set.

    Per seed, every test scenario contributes one adapted-policy cost and
    one fixed-policy cost; the per-seed scenario averages are then reduced
    to mean +- std over seeds.  Both policies are scored on the same rollout
    uniforms (common random numbers), so the paired difference is free of
    simulation noise wherever the two thresholds induce the same decisions.
    """
    if n_seeds < 1:
        raise ValueError(f"n_seeds must be >= 1, got {n_seeds}")
    value_fn = mc_objective(config, n_rollouts)
    eta = schedule.eta(1)

    meta_means = []
    avg_means = []
    detail = []

    def per_scenario(item):
        r, theta = item
        stream = seeding.derived_rng(master_seed, seeding.EVALUATION, r,
                                     seeding.value_key(*theta.as_array()))
        tau_adapted, _ = adapt(tau_meta, theta, config, eta,
                               schedule.gamma, stream, value_fn=value_fn)
        u0, u = draw_rollout_uniforms(config, n_rollouts, stream)
        cost_meta = float(
            batch_discounted_costs(theta, config, tau_adapted, u0, u).mean())
        cost_avg = float(
            batch_discounted_costs(theta, config, tau_avg, u0, u).mean())
        return tau_adapted, cost_meta, cost_avg

    for r in range(n_seeds):
        results = map_ordered(per_scenario,
                              [(r, theta) for theta in test_set], jobs)
        meta_costs = [res[1] for res in results]
        avg_costs = [res[2] for res in results]
        if r == 0:
            for theta, (tau_adapted, cost_meta, cost_avg) in zip(test_set,
                                                                 results):
                detail.append(ScenarioDetail("meta_adapted", theta,
                                             tau_adapted, cost_meta))
                detail.append(ScenarioDetail("dist_average", theta,
                                             tau_avg, cost_avg))
        # Sort before averaging: the reduction is then independent of the
        # iteration order of the test set, bit for bit.
        meta_means.append(float(np.mean(np.sort(meta_costs))))
        avg_means.append(float(np.mean(np.sort(avg_costs))))

    def summarize(label: str, samples) -> PolicyRow:
        samples = np.asarray(samples)
        std = float(samples.std(ddof=1)) if n_seeds > 1 else 0.0
        return PolicyRow(label, float(samples.mean()), std, n_seeds,
                         len(test_set))

    provenance = {
        "master_seed": master_seed,
        "seeds": list(range(n_seeds)),
        "config_digest": config_digest(config),
        "n_rollouts": n_rollouts,
        "tau_meta": tau_meta,
        "tau_avg": tau_avg,
    }
    return EvaluationReport(
        rows=(summarize("meta_adapted", meta_means),
              summarize("dist_average", avg_means)),
        detail=tuple(detail), provenance=provenance)


def sweep_adapted_thresholds(tau_meta: float, scenario_grid: Sequence[Scenario],
                             config: PomdpConfig, schedule: SpsaSchedule,
                             n_repeats: int, master_seed: int = 0,
                             n_rollouts: int = 100, jobs: int = 1):
    """Mean +- std of the one-shot adapted threshold per grid scenario."""
    value_fn = mc_objective(config, n_rollouts)
    eta = schedule.eta(1)

    def per_point(item):
        g, theta = item
        taus = []
        for r in range(n_repeats):
            rng = seeding.derived_rng(master_seed, seeding.SWEEP, g, r)
            tau_adapted, _ = adapt(tau_meta, theta, config, eta,
                                   schedule.gamma, rng, value_fn=value_fn)
            taus.append(tau_adapted)
        taus = np.asarray(taus)
        std = float(taus.std(ddof=1)) if n_repeats > 1 else 0.0
        return theta, float(taus.mean()), std

    return map_ordered(per_point, list(enumerate(scenario_grid)), jobs)


def find_worst_scenario(tau_avg: float, scenario_set: ScenarioSet,
                        config: PomdpConfig, n_rollouts: int = 1000,
                        master_seed: int = 0) -> int:
    """Index of the scenario with the highest cost under the fixed
    distribution-average threshold (common random numbers across scenarios)."""
    rng = seeding.derived_rng(master_seed, seeding.EVALUATION, 0, 0)
    u0, u = draw_rollout_uniforms(config, n_rollouts, rng)
    costs = [float(batch_discounted_costs(theta, config, tau_avg, u0, u).mean())
             for theta in scenario_set]
    return int(np.argmax(costs))


def worst_case_report(tau_meta: float, tau_robust: float, tau_avg: float,
                      scenario_set: ScenarioSet, final_weights,
                      config: PomdpConfig, schedule: SpsaSchedule,
                      n_seeds: int = 10, master_seed: int = 0,
                      n_rollouts: int = 100, jobs: int = 1) -> EvaluationReport:
    """Evaluate the average, meta and robust policies under the empirical
    weighting (uniform over the sampled set) and under a policy-independent
    worst-case point: the scenario costliest for the fixed average policy.

    Meta and robust thresholds are one-shot adapted per scenario; the
    average threshold is applied as-is.  All three policies are scored on
    the same rollout uniforms per (seed, scenario) — common random numbers.
    ``final_weights`` (the adversarial weights a robust training run ended
    with) are recorded in the report provenance as a secondary worst-case
    weighting.
    """
    value_fn = mc_objective(config, n_rollouts)
    eta = schedule.eta(1)
    worst_index = find_worst_scenario(tau_avg, scenario_set, config,
                                      n_rollouts=max(n_rollouts, 500),
                                      master_seed=master_seed)
    weightings = {
        "empirical": np.full(len(scenario_set), 1.0 / len(scenario_set)),
        "worst_case": np.eye(len(scenario_set))[worst_index],
    }
    policies = {"avg": tau_avg, "meta": tau_meta, "robust": tau_robust}

    samples = {(w, p): [] for w in weightings for p in policies}
    detail = []

    def per_scenario(item):
        r, theta = item
        key = seeding.value_key(*theta.as_array())
        taus_used = {}
        for name, tau in policies.items():
            if name == "avg":
                taus_used[name] = tau
            else:
                # A fresh stream with a policy-independent key: policies with
                # equal thresholds adapt identically.
                adapt_rng = seeding.derived_rng(master_seed,
                                                seeding.EVALUATION, 1, r, key, 0)
                taus_used[name], _ = adapt(tau, theta, config, eta,
                                           schedule.gamma, adapt_rng,
                                           value_fn=value_fn)
        cost_rng = seeding.derived_rng(master_seed, seeding.EVALUATION, 1, r,
                                       key, 1)
        u0, u = draw_rollout_uniforms(config, n_rollouts, cost_rng)
        return {name: (tau_used,
                       float(batch_discounted_costs(theta, config, tau_used,
                                                    u0, u).mean()))
                for name, tau_used in taus_used.items()}

    for r in range(n_seeds):
        results = map_ordered(per_scenario,
                              [(r, theta) for theta in scenario_set], jobs)
        costs = {p: np.zeros(len(scenario_set)) for p in policies}
        for j, (theta, result) in enumerate(zip(scenario_set, results)):
            for name, (tau_used, cost) in result.items():
                costs[name][j] = cost
                if r == 0:
                    detail.append(ScenarioDetail(name, theta, tau_used, cost))
        for w_name, w in weightings.items():
            for p_name in policies:
                samples[(w_name, p_name)].append(float(w @ costs[p_name]))

    rows = []
    for (w_name, p_name), values in samples.items():
        values = np.asarray(values)
        std = float(values.std(ddof=1)) if n_seeds > 1 else 0.0
        rows.append(PolicyRow(f"{w_name}/{p_name}", float(values.mean()),
                              std, n_seeds, len(scenario_set)))
    provenance = {
        "master_seed": master_seed,
        "config_digest": config_digest(config),
        "per_seed": {f"{w}/{p}": list(values)
                     for (w, p), values in samples.items()},
        "worst_scenario_index": worst_index,
        "final_robust_weights": [float(w) for w in np.asarray(final_weights)],
        "n_rollouts": n_rollouts,
        "thresholds": {k: float(v) for k, v in policies.items()},
    }
    return EvaluationReport(rows=tuple(rows), detail=tuple(detail),
                            provenance=provenance)
