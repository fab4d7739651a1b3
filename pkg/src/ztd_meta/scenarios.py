"""Scenario distributions: scaled Beta families over one varying transition
probability, and empirical distributions built from attack-group histograms."""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass
from typing import Iterable, Sequence, Tuple, Union

import numpy as np

from .meta import ScenarioSet
from .pomdp import Scenario

VARYING_PARAMS = ("p_u_n", "p_a_n")


class MeanOutOfSupport(ValueError):
    pass


class ValidityExhausted(RuntimeError):
    pass


class DegenerateHistogram(ValueError):
    pass


class NegativeCount(ValueError):
    pass


def validity_interval(base: Scenario, varying_param: str) -> Tuple[float, float]:
    """Range of the varying parameter keeping the scenario in the
    threshold regime, with the other fields fixed by ``base``."""
    if varying_param == "p_u_n":
        hi = min(base.p_a_n, base.p_a_n - base.p_a_d + base.p_u_d)
        return 0.0, hi
    if varying_param == "p_a_n":
        lo = max(base.p_u_n, base.p_u_n - base.p_u_d + base.p_a_d)
        return lo, 1.0
    raise ValueError(f"varying_param must be one of {VARYING_PARAMS}")


def _check_support(lo: float, hi: float, base: Scenario,
                   varying_param: str) -> None:
    valid_lo, valid_hi = validity_interval(base, varying_param)
    if lo < valid_lo - 1e-12 or hi > valid_hi + 1e-12:
        raise ValueError(
            f"support [{lo}, {hi}] exceeds the threshold-regime range "
            f"[{valid_lo}, {valid_hi}] for {varying_param} given {base}")


@dataclass(frozen=True)
class ScaledBeta:
    """Beta(alpha, beta) rescaled to [lo, hi] over one scenario field."""

    lo: float
    hi: float
    alpha: float
    beta: float
    varying_param: str
    base: Scenario

    def __post_init__(self) -> None:
        if self.alpha <= 0.0 or self.beta <= 0.0:
            raise ValueError("alpha and beta must be > 0")
        if not self.lo < self.hi:
            raise ValueError(f"need lo < hi, got [{self.lo}, {self.hi}]")
        if self.varying_param not in VARYING_PARAMS:
            raise ValueError(f"varying_param must be one of {VARYING_PARAMS}")
        _check_support(self.lo, self.hi, self.base, self.varying_param)

    def mean(self) -> float:
        return self.lo + (self.hi - self.lo) * self.alpha / (self.alpha + self.beta)

    def mean_scenario(self) -> Scenario:
        return self.base.replace(**{self.varying_param: self.mean()})

    def sample_params(self, n: int, rng: np.random.Generator) -> np.ndarray:
        return self.lo + (self.hi - self.lo) * rng.beta(self.alpha, self.beta, n)


@dataclass(frozen=True)
class EmpiricalScenarioDist:
    """Weighted finite support over full scenarios."""

    support_points: tuple
    weights: tuple
    source_meta: str = ""

    def __post_init__(self) -> None:
        points = tuple(self.support_points)
        weights = tuple(float(w) for w in self.weights)
        if len(points) != len(weights):
            raise ValueError("support_points and weights must have equal length")
        if not points:
            raise ValueError("support must be nonempty")
        w = np.array(weights)
        if (w < 0.0).any() or abs(w.sum() - 1.0) > 1e-9:
            raise ValueError("weights must lie on the probability simplex")
        for i, theta in enumerate(points):
            if not theta.in_threshold_regime():
                raise ValueError(
                    f"support point {i} violates the threshold-regime bound: {theta}")
        object.__setattr__(self, "support_points", points)
        object.__setattr__(self, "weights", weights)

    def mean_scenario(self) -> Scenario:
        w = np.array(self.weights)
        fields = np.stack([theta.as_array() for theta in self.support_points])
        return Scenario.from_array(w @ fields)


ScenarioDistribution = Union[ScaledBeta, EmpiricalScenarioDist]


def scaled_beta_from_mean(lo: float, hi: float, mean: float,
                          concentration: float, varying_param: str,
                          base: Scenario) -> ScaledBeta:
    """Scaled Beta with the requested mean; alpha + beta = concentration."""
    if concentration <= 0.0:
        raise ValueError("concentration must be > 0")
    if not lo < mean < hi:
        raise MeanOutOfSupport(
            f"mean {mean} must lie strictly inside [{lo}, {hi}]")
    mu = (mean - lo) / (hi - lo)
    return ScaledBeta(lo=lo, hi=hi, alpha=concentration * mu,
                      beta=concentration * (1.0 - mu),
                      varying_param=varying_param, base=base)


def sample_scenarios(dist: ScenarioDistribution, n: int,
                     rng: np.random.Generator,
                     max_retries: int = 1000) -> ScenarioSet:
    """Draw n i.i.d. scenarios; invalid draws are resampled a bounded
    number of times before failing loudly."""
    if n < 1:
        raise ValueError(f"n must be >= 1, got {n}")
    if isinstance(dist, EmpiricalScenarioDist):
        indices = rng.choice(len(dist.support_points), size=n,
                             p=np.array(dist.weights))
        scenarios = tuple(dist.support_points[i] for i in indices)
        return ScenarioSet(scenarios, provenance=f"empirical:{dist.source_meta}")

    scenarios = []
    for value in dist.sample_params(n, rng):
        theta = dist.base.replace(**{dist.varying_param: float(value)})
        retries = 0
        while not theta.in_threshold_regime():
            if retries >= max_retries:
                raise ValidityExhausted(
                    f"could not draw a valid scenario after {max_retries} retries")
            value = float(dist.sample_params(1, rng)[0])
            theta = dist.base.replace(**{dist.varying_param: value})
            retries += 1
        scenarios.append(theta)
    provenance = (f"scaled_beta({dist.varying_param} in [{dist.lo}, {dist.hi}], "
                  f"alpha={dist.alpha:.6g}, beta={dist.beta:.6g})")
    return ScenarioSet(tuple(scenarios), provenance=provenance)


def ingest_histogram(rows: Iterable[Tuple[str, int]], target_param: str,
                     lo: float, hi: float,
                     base: Scenario) -> EmpiricalScenarioDist:
    """Turn an attack-group histogram into an empirical scenario distribution.

    Each distinct technique count maps affinely (min-max) onto [lo, hi] of
    the target parameter; the weight of a support point is proportional to
    the number of groups sharing that count.
    """
    counts: dict = {}
    n_rows = 0
    for group_id, technique_count in rows:
        technique_count = int(technique_count)
        if technique_count < 0:
            raise NegativeCount(
                f"group {group_id!r} has negative technique count {technique_count}")
        counts[technique_count] = counts.get(technique_count, 0) + 1
        n_rows += 1
    distinct = sorted(counts)
    if len(distinct) < 2:
        raise DegenerateHistogram(
            "need at least 2 distinct technique counts to span a support")
    c_min, c_max = distinct[0], distinct[-1]
    points = []
    weights = []
    for c in distinct:
        value = lo + (hi - lo) * (c - c_min) / (c_max - c_min)
        points.append(base.replace(**{target_param: value}))
        weights.append(counts[c] / n_rows)
    return EmpiricalScenarioDist(
        support_points=tuple(points), weights=tuple(weights),
        source_meta=f"histogram({n_rows} groups, counts {c_min}..{c_max})")
