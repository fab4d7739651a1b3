"""Scikit-learn style front end.

``MetaThresholdDefense`` wraps the meta-training loop in the familiar
fit/predict surface: ``fit`` learns the meta threshold from an array of
scenario parameters, ``predict`` returns one-shot adapted thresholds for
new scenarios, and ``score`` is the negative mean adapted cost (higher is
better, as scikit-learn expects).
"""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator
from sklearn.exceptions import NotFittedError

from . import seeding
from .meta import ScenarioSet, adapt, mc_objective, train
from .pomdp import PomdpConfig, Scenario
from .spsa import SpsaSchedule


def as_scenarios(X) -> list:
    """Coerce an (n, 4) array or an iterable of Scenario into a list of
    Scenario."""
    if isinstance(X, ScenarioSet):
        return list(X)
    items = list(X)
    if items and isinstance(items[0], Scenario):
        return items
    arr = np.asarray(X, dtype=float)
    if arr.ndim != 2 or arr.shape[1] != 4:
        raise ValueError(
            f"expected shape (n, 4) scenario parameters, got {arr.shape}")
    return [Scenario.from_array(row) for row in arr]


class MetaThresholdDefense(BaseEstimator):
    """Meta-learned trust-threshold policy for zero-trust account defense.

    Parameters mirror the training loop; ``mode='robust'`` enables the
    adversarial reweighting of training scenarios.

    Attributes set by fit: ``tau_meta_`` (the learned meta threshold),
    ``state_`` (full trainer state incl. history), ``converged_``.
    """

    def __init__(self, mode: str = "agnostic", config: PomdpConfig = None,
                 schedule: SpsaSchedule = None, batch_size: int = 10,
                 max_iters: int = 2000, n_rollouts: int = 100,
                 stop_window: int = 3, tau_init: float = 0.5,
                 random_state: int = 0):
        self.mode = mode
        self.config = config
        self.schedule = schedule
        self.batch_size = batch_size
        self.max_iters = max_iters
        self.n_rollouts = n_rollouts
        self.stop_window = stop_window
        self.tau_init = tau_init
        self.random_state = random_state

    def _config(self) -> PomdpConfig:
        return self.config if self.config is not None else PomdpConfig()

    def _schedule(self) -> SpsaSchedule:
        return self.schedule if self.schedule is not None else SpsaSchedule()

    def fit(self, X, y=None):
        scenarios = ScenarioSet(tuple(as_scenarios(X)), provenance="fit(X)")
        result = train(
            scenarios, self._config(), self._schedule(), mode=self.mode,
            batch_size=min(self.batch_size, len(scenarios)),
            max_iters=self.max_iters, master_seed=self.random_state,
            n_rollouts=self.n_rollouts, stop_window=self.stop_window,
            tau_init=self.tau_init)
        self.tau_meta_ = result.tau_meta
        self.state_ = result.state
        self.converged_ = result.converged
        return self

    def _check_fitted(self) -> None:
        if not hasattr(self, "tau_meta_"):
            raise NotFittedError(
                "this MetaThresholdDefense instance is not fitted yet")

    def predict(self, X) -> np.ndarray:
        """One-shot adapted threshold for each scenario."""
        self._check_fitted()
        config = self._config()
        schedule = self._schedule()
        value_fn = mc_objective(config, self.n_rollouts)
        taus = []
        for j, theta in enumerate(as_scenarios(X)):
            rng = seeding.derived_rng(self.random_state, seeding.EVALUATION, j)
            tau_adapted, _ = adapt(self.tau_meta_, theta, config,
                                   schedule.eta(1), schedule.gamma, rng,
                                   value_fn=value_fn)
            taus.append(tau_adapted)
        return np.asarray(taus)

    def score(self, X, y=None) -> float:
        """Negative mean discounted cost of the adapted policies."""
        self._check_fitted()
        config = self._config()
        value_fn = mc_objective(config, self.n_rollouts)
        scenarios = as_scenarios(X)
        taus = self.predict(X)
        costs = []
        for j, (theta, tau) in enumerate(zip(scenarios, taus)):
            rng = seeding.derived_rng(self.random_state, seeding.EVALUATION,
                                      j, 1)
            costs.append(value_fn(float(tau), theta, rng))
        return -float(np.mean(costs))
