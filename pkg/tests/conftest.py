import numpy as np
import pytest

from ztd_meta import (BASELINE_CONFIG, BASELINE_SCENARIO, PomdpConfig,
                      Scenario, ThresholdPolicy, mc_value_estimate)


@pytest.fixture(scope="session", autouse=True)
def warm_kernel():
    """Trigger the JIT compilation of the rollout kernel once, so individual
    test timings are not distorted by compilation."""
    mc_value_estimate(BASELINE_SCENARIO, PomdpConfig(horizon=2),
                      ThresholdPolicy(0.5), 1, np.random.default_rng(0))


@pytest.fixture
def baseline_config() -> PomdpConfig:
    return BASELINE_CONFIG


@pytest.fixture
def baseline_scenario() -> Scenario:
    return BASELINE_SCENARIO


@pytest.fixture
def zero_cost_config() -> PomdpConfig:
    return PomdpConfig(cost=((0.0, 0.0), (0.0, 0.0)))


def random_valid_scenario(rng: np.random.Generator) -> Scenario:
    """Uniform draw over scenarios satisfying the threshold-regime bound."""
    while True:
        p_a_d, p_u_d, p_a_n, p_u_n = rng.random(4)
        theta = Scenario(p_a_d, p_u_d, p_a_n, p_u_n)
        if theta.in_threshold_regime():
            return theta
