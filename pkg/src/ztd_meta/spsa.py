"""Two-point simultaneous-perturbation gradient estimation for the scalar
trust threshold, plus the step-size/perturbation schedules."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np


def project_unit_interval(x: float) -> float:
    """Clamp to [0, 1]."""
    return min(1.0, max(0.0, float(x)))


@dataclass(frozen=True)
class SpsaSchedule:
    """Iteration schedules, indexed from t = 1.

    Perturbation eta(t) = eta_coef / t**eta_exp; descent step
    alpha(t) = alpha_coef / (t + alpha_offset)**alpha_exp; ascent step
    beta(t) analogous.  gamma is the (constant) adaptation step size and
    epsilon the stopping tolerance on gradient magnitudes.
    """

    eta_coef: float = 0.4
    eta_exp: float = 0.2
    alpha_coef: float = 0.017
    alpha_offset: float = 50.0
    alpha_exp: float = 0.602
    beta_coef: float = 0.017
    beta_offset: float = 50.0
    beta_exp: float = 0.602
    gamma: float = 0.005
    epsilon: float = 1e-3

    def __post_init__(self) -> None:
        for name in ("eta_coef", "alpha_coef", "beta_coef", "gamma", "epsilon"):
            if getattr(self, name) <= 0.0:
                raise ValueError(f"{name} must be > 0")
        if self.eta_exp < 0.0:
            raise ValueError("eta_exp must be >= 0 (eta must be nonincreasing)")

    def eta(self, t: int) -> float:
        return self.eta_coef / t ** self.eta_exp

    def alpha(self, t: int) -> float:
        return self.alpha_coef / (t + self.alpha_offset) ** self.alpha_exp

    def beta(self, t: int) -> float:
        return self.beta_coef / (t + self.beta_offset) ** self.beta_exp


def spsa_gradient(objective: Callable[[float], float], tau: float,
                  eta: float, rng: Optional[np.random.Generator] = None,
                  direction: Optional[int] = None) -> float:
    """Central-difference gradient estimate from exactly two evaluations.

    The perturbation sign is Rademacher unless ``direction`` (+1/-1) is
    given.  Perturbed points are clamped to [0, 1]; the nominal 2*eta
    denominator is kept even when clamping shortens the actual spacing,
    which adds a boundary bias of the same order as the perturbation.
    """
    if eta <= 0.0:
        raise ValueError(f"eta must be > 0, got {eta}")
    if direction is None:
        if rng is None:
            raise ValueError("either rng or direction must be provided")
        d = 1 if rng.random() < 0.5 else -1
    else:
        if direction not in (1, -1):
            raise ValueError(f"direction must be +1 or -1, got {direction}")
        d = direction
    up = objective(project_unit_interval(tau + eta * d))
    down = objective(project_unit_interval(tau - eta * d))
    return (up - down) / (2.0 * eta * d)
