"""Run configuration: JSON loading, validation and canonical serialization.

Every experiment is described by one JSON file; omitted fields fall back to
the documented defaults, unknown keys are rejected so typos fail loudly.
"""

from __future__ import annotations

import dataclasses
import hashlib
import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

from .pomdp import BASELINE_SCENARIO, PomdpConfig, Scenario
from .scenarios import (EmpiricalScenarioDist, ScaledBeta,
                        ScenarioDistribution, ingest_histogram,
                        scaled_beta_from_mean)
from .spsa import SpsaSchedule


class ParseError(ValueError):
    pass


class ValidationError(ValueError):
    def __init__(self, field_name: str, reason: str):
        self.field_name = field_name
        self.reason = reason
        super().__init__(f"{field_name}: {reason}")


def _section(data: dict, name: str) -> dict:
    value = data.pop(name, {})
    if not isinstance(value, dict):
        raise ValidationError(name, "must be an object")
    return dict(value)


def _reject_unknown(data: dict, context: str) -> None:
    if data:
        raise ValidationError(context, f"unknown keys: {sorted(data)}")


def _number(data: dict, key: str, default, context: str,
            lo=None, hi=None, exclusive=False, integer=False):
    value = data.pop(key, default)
    name = f"{context}.{key}"
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ValidationError(name, f"must be a number, got {value!r}")
    if integer:
        if int(value) != value:
            raise ValidationError(name, f"must be an integer, got {value!r}")
        value = int(value)
    else:
        value = float(value)
    if lo is not None:
        if exclusive and not value > lo:
            raise ValidationError(name, f"must be > {lo}, got {value}")
        if not exclusive and not value >= lo:
            raise ValidationError(name, f"must be >= {lo}, got {value}")
    if hi is not None:
        if exclusive and not value < hi:
            raise ValidationError(name, f"must be < {hi}, got {value}")
        if not exclusive and not value <= hi:
            raise ValidationError(name, f"must be <= {hi}, got {value}")
    return value


def _string(data: dict, key: str, default: str, context: str,
            choices=None) -> str:
    value = data.pop(key, default)
    name = f"{context}.{key}"
    if not isinstance(value, str):
        raise ValidationError(name, f"must be a string, got {value!r}")
    if choices is not None and value not in choices:
        raise ValidationError(name, f"must be one of {choices}, got {value!r}")
    return value


def _scenario(data: dict, key: str, default: Scenario, context: str) -> Scenario:
    value = data.pop(key, None)
    if value is None:
        return default
    name = f"{context}.{key}"
    if not isinstance(value, dict):
        raise ValidationError(name, "must be an object with the four "
                                    "transition probabilities")
    value = dict(value)
    fields = {}
    for f in ("p_a_d", "p_u_d", "p_a_n", "p_u_n"):
        fields[f] = _number(value, f, getattr(default, f), name, lo=0.0, hi=1.0)
    _reject_unknown(value, name)
    return Scenario(**fields)


@dataclass(frozen=True)
class ScenarioDistSpec:
    family: str = "scaled_beta"
    varying_param: str = "p_u_n"
    lo: float = 0.0
    hi: float = 0.7
    mean: float = 0.35
    concentration: float = 10.0
    base: Scenario = BASELINE_SCENARIO
    histogram_path: Optional[str] = None

    def build(self, root: Path = Path(".")) -> ScenarioDistribution:
        if self.family == "scaled_beta":
            return scaled_beta_from_mean(self.lo, self.hi, self.mean,
                                         self.concentration,
                                         self.varying_param, self.base)
        rows = read_histogram_csv(root / self.histogram_path)
        return ingest_histogram(rows, self.varying_param, self.lo, self.hi,
                                self.base)


@dataclass(frozen=True)
class TrainingConfig:
    mode: str = "agnostic"
    n_scenarios: int = 1000
    batch_size: int = 10
    max_iters: int = 2000
    n_rollouts: int = 100
    tau_init: float = 0.5
    stop_window: int = 3
    schedule: SpsaSchedule = field(default_factory=SpsaSchedule)


@dataclass(frozen=True)
class EvalConfig:
    n_seeds: int = 50
    test_size: int = 100
    grid_step: float = 0.01
    n_rollouts: int = 100


@dataclass(frozen=True)
class RunConfig:
    pomdp: PomdpConfig = field(default_factory=PomdpConfig)
    scenario_dist: ScenarioDistSpec = field(default_factory=ScenarioDistSpec)
    training: TrainingConfig = field(default_factory=TrainingConfig)
    evaluation: EvalConfig = field(default_factory=EvalConfig)
    master_seed: int = 0
    output_dir: str = "runs"

    def to_dict(self) -> dict:
        data = dataclasses.asdict(self)
        data["pomdp"]["cost"] = [list(row) for row in self.pomdp.cost]
        return data

    def digest(self) -> str:
        payload = json.dumps(self.to_dict(), sort_keys=True)
        return hashlib.sha256(payload.encode()).hexdigest()[:16]


def read_histogram_csv(path) -> list:
    """Read `group_id,technique_count` rows from a UTF-8 CSV with header."""
    import csv

    path = Path(path)
    if not path.exists():
        raise ValidationError("histogram_path", f"file not found: {path}")
    with open(path, newline="", encoding="utf-8") as handle:
        reader = csv.DictReader(handle)
        if reader.fieldnames != ["group_id", "technique_count"]:
            raise ParseError(
                f"{path}: expected header 'group_id,technique_count', "
                f"got {reader.fieldnames}")
        rows = []
        for line_no, row in enumerate(reader, start=2):
            try:
                rows.append((row["group_id"], int(row["technique_count"])))
            except (TypeError, ValueError):
                raise ParseError(
                    f"{path}:{line_no}: bad technique_count "
                    f"{row.get('technique_count')!r}")
    return rows


def config_from_dict(data: dict, root: Path = Path(".")) -> RunConfig:
    data = dict(data)

    pomdp_data = _section(data, "pomdp")
    cost = pomdp_data.pop("cost", [[10.0, 15.0], [3.0, 0.0]])
    try:
        cost = tuple(tuple(float(c) for c in row) for row in cost)
    except (TypeError, ValueError):
        raise ValidationError("pomdp.cost", f"must be a 2x2 matrix, got {cost!r}")
    pomdp_kwargs = dict(
        q_a=_number(pomdp_data, "q_a", 0.9, "pomdp", lo=0.0, hi=1.0),
        q_u=_number(pomdp_data, "q_u", 0.1, "pomdp", lo=0.0, hi=1.0),
        rho=_number(pomdp_data, "rho", 0.86, "pomdp", lo=0.0, hi=1.0,
                    exclusive=True),
        horizon=_number(pomdp_data, "horizon", 100, "pomdp", lo=1,
                        integer=True),
        b0_legit=_number(pomdp_data, "b0_legit", 0.5, "pomdp", lo=0.0, hi=1.0),
    )
    _reject_unknown(pomdp_data, "pomdp")
    try:
        pomdp = PomdpConfig(cost=cost, **pomdp_kwargs)
    except ValueError as exc:
        raise ValidationError("pomdp", str(exc))

    dist_data = _section(data, "scenario_dist")
    family = _string(dist_data, "family", "scaled_beta", "scenario_dist",
                     choices=("scaled_beta", "histogram"))
    varying = _string(dist_data, "varying_param", "p_u_n", "scenario_dist",
                      choices=("p_u_n", "p_a_n"))
    defaults = {"p_u_n": (0.0, 0.7, 0.35), "p_a_n": (0.6, 1.0, 0.8)}[varying]
    spec = ScenarioDistSpec(
        family=family,
        varying_param=varying,
        lo=_number(dist_data, "lo", defaults[0], "scenario_dist", lo=0.0, hi=1.0),
        hi=_number(dist_data, "hi", defaults[1], "scenario_dist", lo=0.0, hi=1.0),
        mean=_number(dist_data, "mean", defaults[2], "scenario_dist",
                     lo=0.0, hi=1.0),
        concentration=_number(dist_data, "concentration", 10.0,
                              "scenario_dist", lo=0.0, exclusive=True),
        base=_scenario(dist_data, "base", BASELINE_SCENARIO, "scenario_dist"),
        histogram_path=dist_data.pop("histogram_path", None),
    )
    _reject_unknown(dist_data, "scenario_dist")
    if spec.family == "histogram":
        if not spec.histogram_path:
            raise ValidationError("scenario_dist.histogram_path",
                                  "required when family is 'histogram'")
        if not (root / spec.histogram_path).exists():
            raise ValidationError("scenario_dist.histogram_path",
                                  f"file not found: {root / spec.histogram_path}")

    training_data = _section(data, "training")
    schedule_data = _section(training_data, "schedule")
    schedule_kwargs = {}
    for name, default in (("eta_coef", 0.4), ("eta_exp", 0.2),
                          ("alpha_coef", 0.017), ("alpha_offset", 50.0),
                          ("alpha_exp", 0.602), ("beta_coef", 0.017),
                          ("beta_offset", 50.0), ("beta_exp", 0.602),
                          ("gamma", 0.005), ("epsilon", 1e-3)):
        schedule_kwargs[name] = _number(schedule_data, name, default,
                                        "training.schedule")
    _reject_unknown(schedule_data, "training.schedule")
    try:
        schedule = SpsaSchedule(**schedule_kwargs)
    except ValueError as exc:
        raise ValidationError("training.schedule", str(exc))

    training = TrainingConfig(
        mode=_string(training_data, "mode", "agnostic", "training",
                     choices=("agnostic", "robust")),
        n_scenarios=_number(training_data, "n_scenarios", 1000, "training",
                            lo=1, integer=True),
        batch_size=_number(training_data, "batch_size", 10, "training",
                           lo=1, integer=True),
        max_iters=_number(training_data, "max_iters", 2000, "training",
                          lo=1, integer=True),
        n_rollouts=_number(training_data, "n_rollouts", 100, "training",
                           lo=1, integer=True),
        tau_init=_number(training_data, "tau_init", 0.5, "training",
                         lo=0.0, hi=1.0),
        stop_window=_number(training_data, "stop_window", 3, "training",
                            lo=1, integer=True),
        schedule=schedule,
    )
    _reject_unknown(training_data, "training")
    if training.batch_size > training.n_scenarios:
        raise ValidationError("training.batch_size",
                              "must not exceed training.n_scenarios")

    eval_data = _section(data, "evaluation")
    evaluation = EvalConfig(
        n_seeds=_number(eval_data, "n_seeds", 50, "evaluation", lo=1,
                        integer=True),
        test_size=_number(eval_data, "test_size", 100, "evaluation", lo=1,
                          integer=True),
        grid_step=_number(eval_data, "grid_step", 0.01, "evaluation",
                          lo=0.0, hi=0.1, exclusive=False),
        n_rollouts=_number(eval_data, "n_rollouts", 100, "evaluation", lo=1,
                           integer=True),
    )
    if not evaluation.grid_step > 0.0:
        raise ValidationError("evaluation.grid_step", "must be > 0")
    _reject_unknown(eval_data, "evaluation")

    master_seed = _number(data, "master_seed", 0, "config", lo=0, integer=True)
    output_dir = _string(data, "output_dir", "runs", "config")
    _reject_unknown(data, "config")

    return RunConfig(pomdp=pomdp, scenario_dist=spec, training=training,
                     evaluation=evaluation, master_seed=master_seed,
                     output_dir=output_dir)


def load_config(path) -> RunConfig:
    """Load and validate a JSON run configuration."""
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise ParseError(f"cannot read {path}: {exc}")
    try:
        data = json.loads(text) if text.strip() else {}
    except json.JSONDecodeError as exc:
        raise ParseError(f"{path}:{exc.lineno}: {exc.msg}")
    if not isinstance(data, dict):
        raise ParseError(f"{path}: top level must be a JSON object")
    return config_from_dict(data, root=path.parent)
