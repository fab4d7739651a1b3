import json

import pytest
from click.testing import CliRunner

from ztd_meta import (ParseError, RunConfig, ValidationError,
                      config_from_dict, load_config)
from ztd_meta.cli import main
from ztd_meta.config import read_histogram_csv

ZERO_COST_TRAIN = {
    "pomdp": {"cost": [[0.0, 0.0], [0.0, 0.0]], "horizon": 10},
    "training": {"n_scenarios": 5, "batch_size": 2, "max_iters": 10,
                 "stop_window": 1, "n_rollouts": 5},
}

SMALL_TRAIN = {
    "pomdp": {"horizon": 10},
    "training": {"n_scenarios": 5, "batch_size": 2, "max_iters": 3,
                 "n_rollouts": 5},
    "evaluation": {"n_seeds": 2, "test_size": 4, "n_rollouts": 10,
                   "grid_step": 0.05},
}


def write_config(path, data):
    path.write_text(json.dumps(data), encoding="utf-8")
    return str(path)


class TestConfig:
    def test_defaults_from_empty_dict(self):
        cfg = config_from_dict({})
        assert cfg == RunConfig()
        assert cfg.pomdp.rho == 0.86
        assert cfg.pomdp.cost == ((10.0, 15.0), (3.0, 0.0))
        assert cfg.training.schedule.eta(1) == 0.4
        assert cfg.scenario_dist.varying_param == "p_u_n"

    def test_load_empty_file_gives_defaults(self, tmp_path):
        path = tmp_path / "cfg.json"
        path.write_text("", encoding="utf-8")
        assert load_config(path) == RunConfig()

    def test_invalid_rho_names_field(self):
        with pytest.raises(ValidationError, match="rho"):
            config_from_dict({"pomdp": {"rho": 1.2}})

    def test_digest_round_trip(self):
        cfg = config_from_dict({"pomdp": {"rho": 0.9},
                                "training": {"max_iters": 7}})
        again = config_from_dict(cfg.to_dict())
        assert again == cfg
        assert again.digest() == cfg.digest()

    @pytest.mark.parametrize("data, field_name", [
        ({"bogus": 1}, "config"),
        ({"pomdp": {"bogus": 1}}, "pomdp"),
        ({"training": {"bogus": 1}}, "training"),
        ({"training": {"schedule": {"bogus": 1}}}, "training.schedule"),
        ({"scenario_dist": {"bogus": 1}}, "scenario_dist"),
        ({"evaluation": {"bogus": 1}}, "evaluation"),
    ])
    def test_unknown_keys_rejected(self, data, field_name):
        with pytest.raises(ValidationError, match=field_name):
            config_from_dict(data)

    @pytest.mark.parametrize("data", [
        {"pomdp": {"q_a": "high"}},
        {"pomdp": {"horizon": 2.5}},
        {"pomdp": {"horizon": True}},
        {"training": {"mode": "fancy"}},
        {"training": {"batch_size": 10, "n_scenarios": 5}},
        {"scenario_dist": {"family": "histogram"}},  # path required
        {"master_seed": -1},
    ])
    def test_invalid_values_rejected(self, data):
        with pytest.raises(ValidationError):
            config_from_dict(data)

    def test_malformed_json_is_parse_error(self, tmp_path):
        path = tmp_path / "cfg.json"
        path.write_text("{not json", encoding="utf-8")
        with pytest.raises(ParseError):
            load_config(path)

    def test_non_object_top_level(self, tmp_path):
        path = tmp_path / "cfg.json"
        path.write_text("[1, 2]", encoding="utf-8")
        with pytest.raises(ParseError):
            load_config(path)


class TestHistogramCsv:
    def test_reads_valid_file(self, tmp_path):
        path = tmp_path / "h.csv"
        path.write_text("group_id,technique_count\nA,3\nB,7\n",
                        encoding="utf-8")
        assert read_histogram_csv(path) == [("A", 3), ("B", 7)]

    def test_bad_header(self, tmp_path):
        path = tmp_path / "h.csv"
        path.write_text("name,count\nA,3\n", encoding="utf-8")
        with pytest.raises(ParseError, match="header"):
            read_histogram_csv(path)

    def test_bad_count(self, tmp_path):
        path = tmp_path / "h.csv"
        path.write_text("group_id,technique_count\nA,three\n",
                        encoding="utf-8")
        with pytest.raises(ParseError, match="technique_count"):
            read_histogram_csv(path)

    def test_missing_file(self, tmp_path):
        with pytest.raises(ValidationError, match="not found"):
            read_histogram_csv(tmp_path / "nope.csv")


@pytest.fixture
def runner():
    return CliRunner()


class TestTrainCommand:
    def test_zero_cost_converges_with_single_history_row(self, tmp_path,
                                                         runner):
        cfg = write_config(tmp_path / "cfg.json",
                           {**ZERO_COST_TRAIN, "output_dir": str(tmp_path / "out")})
        result = runner.invoke(main, ["train", "-c", cfg])
        assert result.exit_code == 0, result.output
        history = (tmp_path / "out" / "history.csv").read_text().splitlines()
        assert history[0] == "iter,tau_meta,stop_metric"
        assert len(history) == 2  # header + the single converged iteration
        policy = json.loads((tmp_path / "out" / "policy.json").read_text())
        assert policy["tau_meta"] == 0.5
        assert policy["converged"] is True
        assert policy["final_weights"] is None
        manifest = json.loads((tmp_path / "out" / "manifest.json").read_text())
        assert manifest["command"] == "train[agnostic]"
        assert "timestamp" in manifest

    def test_not_converged_exits_2_but_writes_artifacts(self, tmp_path,
                                                        runner):
        data = {"pomdp": {"horizon": 10},
                "training": {"n_scenarios": 5, "batch_size": 2,
                             "max_iters": 2, "n_rollouts": 5},
                "output_dir": str(tmp_path / "out")}
        result = runner.invoke(main,
                               ["train", "-c",
                                write_config(tmp_path / "cfg.json", data)])
        assert result.exit_code == 2
        assert "NotConverged" in result.stderr
        assert (tmp_path / "out" / "policy.json").exists()
        assert (tmp_path / "out" / "history.csv").exists()

    def test_byte_identical_reruns(self, tmp_path, runner):
        data = {"pomdp": {"horizon": 10},
                "training": {"n_scenarios": 5, "batch_size": 2,
                             "max_iters": 3, "n_rollouts": 5}}
        cfg = write_config(tmp_path / "cfg.json", data)
        for d in ("a", "b"):
            runner.invoke(main, ["train", "-c", cfg, "-o",
                                 str(tmp_path / d)])
        for name in ("history.csv", "policy.json"):
            assert (tmp_path / "a" / name).read_bytes() == \
                (tmp_path / "b" / name).read_bytes()

    def test_robust_records_weights(self, tmp_path, runner):
        data = {**ZERO_COST_TRAIN, "training": {**ZERO_COST_TRAIN["training"],
                                                "mode": "robust"}}
        cfg = write_config(tmp_path / "cfg.json", data)
        result = runner.invoke(main, ["train-robust", "-c", cfg, "-o",
                                      str(tmp_path / "out")])
        assert result.exit_code == 0, result.output
        policy = json.loads((tmp_path / "out" / "policy.json").read_text())
        weights = policy["final_weights"]
        assert len(weights) == 5
        assert sum(weights) == pytest.approx(1.0, abs=1e-9)

    def test_bad_config_exits_1(self, tmp_path, runner):
        cfg = write_config(tmp_path / "cfg.json", {"pomdp": {"rho": 2.0}})
        result = runner.invoke(main, ["train", "-c", cfg])
        assert result.exit_code == 1
        assert result.stderr.startswith("error: ValidationError:")


class TestAdaptCommand:
    def test_outputs_deterministic_json(self, tmp_path, runner):
        cfg = write_config(tmp_path / "cfg.json", {"pomdp": {"horizon": 10}})
        args = ["adapt", "-c", cfg, "--tau", "0.5",
                "--scenario", "0.2,0.1,0.8,0.5", "--seed", "3"]
        a = runner.invoke(main, args)
        b = runner.invoke(main, args)
        assert a.exit_code == 0, a.output
        payload = json.loads(a.output)
        assert 0.0 <= payload["tau_adapted"] <= 1.0
        assert a.output == b.output

    def test_bad_scenario_exits_1(self, tmp_path, runner):
        cfg = write_config(tmp_path / "cfg.json", {})
        result = runner.invoke(main, ["adapt", "-c", cfg, "--tau", "0.5",
                                      "--scenario", "0.2,0.1"])
        assert result.exit_code == 1
        assert "error: ValidationError" in result.stderr


def train_policy(tmp_path, runner, name="policy", mode="train",
                 extra=None):
    data = dict(SMALL_TRAIN)
    if extra:
        data = {**data, **extra}
    cfg = write_config(tmp_path / f"{name}_cfg.json", data)
    out = tmp_path / name
    result = runner.invoke(main, [mode, "-c", cfg, "-o", str(out)])
    assert result.exit_code in (0, 2), result.output
    return cfg, str(out / "policy.json")


class TestEvalCommand:
    def test_writes_reports(self, tmp_path, runner):
        cfg, policy = train_policy(tmp_path, runner)
        result = runner.invoke(main, ["eval", "-c", cfg, "--policy", policy,
                                      "-o", str(tmp_path / "eval")])
        assert result.exit_code == 0, result.output
        lines = (tmp_path / "eval" / "eval.csv").read_text().splitlines()
        assert lines[0] == "label,mean_cost,std_dev,n_seeds"
        labels = [line.split(",")[0] for line in lines[1:]]
        assert labels == ["meta_adapted", "dist_average"]
        detail = (tmp_path / "eval" / "eval_detail.csv").read_text().splitlines()
        assert len(detail) == 1 + 2 * 4  # header + 2 labels x test_size
        manifest = json.loads((tmp_path / "eval" / "manifest.json").read_text())
        assert "tau_avg" in manifest and "tau_meta" in manifest

    def test_sampled_baseline_adds_row(self, tmp_path, runner):
        cfg, policy = train_policy(tmp_path, runner)
        result = runner.invoke(main, ["eval", "-c", cfg, "--policy", policy,
                                      "--sampled-baseline",
                                      "-o", str(tmp_path / "eval")])
        assert result.exit_code == 0, result.output
        lines = (tmp_path / "eval" / "eval.csv").read_text().splitlines()
        labels = [line.split(",")[0] for line in lines[1:]]
        assert labels == ["meta_adapted", "dist_average", "sampled_average"]
        manifest = json.loads((tmp_path / "eval" / "manifest.json").read_text())
        assert "tau_sampled" in manifest

    def test_robust_policy_writes_worst_case(self, tmp_path, runner):
        cfg, policy = train_policy(tmp_path, runner)
        _, robust = train_policy(
            tmp_path, runner, name="robust", mode="train-robust",
            extra={"training": {**SMALL_TRAIN["training"], "mode": "robust"}})
        result = runner.invoke(main, ["eval", "-c", cfg, "--policy", policy,
                                      "--robust-policy", robust,
                                      "-o", str(tmp_path / "eval")])
        assert result.exit_code == 0, result.output
        lines = (tmp_path / "eval" / "worst_case.csv").read_text().splitlines()
        labels = {line.split(",")[0] for line in lines[1:]}
        assert labels == {f"{w}/{p}" for w in ("empirical", "worst_case")
                          for p in ("avg", "meta", "robust")}

    def test_byte_identical_eval_reruns(self, tmp_path, runner):
        cfg, policy = train_policy(tmp_path, runner)
        for d in ("e1", "e2"):
            result = runner.invoke(main, ["eval", "-c", cfg, "--policy",
                                          policy, "-o", str(tmp_path / d)])
            assert result.exit_code == 0, result.output
        for name in ("eval.csv", "eval_detail.csv"):
            assert (tmp_path / "e1" / name).read_bytes() == \
                (tmp_path / "e2" / name).read_bytes()

    def test_policy_missing_key_exits_1(self, tmp_path, runner):
        cfg = write_config(tmp_path / "cfg.json", SMALL_TRAIN)
        bad = tmp_path / "policy.json"
        bad.write_text("{}", encoding="utf-8")
        result = runner.invoke(main, ["eval", "-c", cfg, "--policy",
                                      str(bad)])
        assert result.exit_code == 1
        assert "error:" in result.stderr


class TestSweepCommand:
    def test_writes_grid_rows(self, tmp_path, runner):
        cfg, policy = train_policy(tmp_path, runner)
        result = runner.invoke(main, ["sweep", "-c", cfg, "--policy", policy,
                                      "--grid", "0.1:0.6:3", "--repeats", "2",
                                      "-o", str(tmp_path / "sweep")])
        assert result.exit_code == 0, result.output
        lines = (tmp_path / "sweep" / "sweep.csv").read_text().splitlines()
        assert lines[0] == "param_value,tau_mean,tau_std"
        assert len(lines) == 4
        assert [line.split(",")[0] for line in lines[1:]] == \
            [repr(v) for v in (0.1, 0.35, 0.6)]

    def test_bad_grid_spec_exits_1(self, tmp_path, runner):
        cfg, policy = train_policy(tmp_path, runner)
        result = runner.invoke(main, ["sweep", "-c", cfg, "--policy", policy,
                                      "--grid", "oops"])
        assert result.exit_code == 1
        assert "error: ValidationError" in result.stderr


class TestIngestCommand:
    def test_writes_empirical_dist(self, tmp_path, runner):
        cfg = write_config(tmp_path / "cfg.json",
                           {"scenario_dist": {"varying_param": "p_a_n"}})
        hist = tmp_path / "h.csv"
        hist.write_text("group_id,technique_count\nA,2\nB,2\nC,10\n",
                        encoding="utf-8")
        result = runner.invoke(main, ["ingest-histogram", "-c", cfg,
                                      "--csv", str(hist),
                                      "-o", str(tmp_path / "out")])
        assert result.exit_code == 0, result.output
        payload = json.loads(
            (tmp_path / "out" / "empirical_dist.json").read_text())
        assert payload["weights"] == [2 / 3, 1 / 3]
        assert [p["p_a_n"] for p in payload["support_points"]] == [0.6, 1.0]

    def test_degenerate_histogram_exits_1(self, tmp_path, runner):
        cfg = write_config(tmp_path / "cfg.json", {})
        hist = tmp_path / "h.csv"
        hist.write_text("group_id,technique_count\nA,5\nB,5\n",
                        encoding="utf-8")
        result = runner.invoke(main, ["ingest-histogram", "-c", cfg,
                                      "--csv", str(hist)])
        assert result.exit_code == 1
        assert "error: DegenerateHistogram" in result.stderr
