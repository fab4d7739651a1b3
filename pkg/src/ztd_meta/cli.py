"""Command-line front end.

Subcommands: train, train-robust, adapt, eval, sweep, ingest-histogram.
All outputs are plain CSV/JSON; given the same config and master seed the
CSVs are byte-identical across runs (timestamps live in a single manifest
field).  Exit codes: 0 success, 2 training ran but did not converge
(artifacts are still written), 1 hard error.
"""

from __future__ import annotations

import csv
import dataclasses
import json
import sys
from datetime import datetime, timezone
from pathlib import Path

import click
import numpy as np

from . import __version__, seeding
from .config import ParseError, RunConfig, ValidationError, load_config, \
    read_histogram_csv
from ._parallel import clamp_jobs
from .evaluate import (avg_baseline_threshold, evaluate_policies,
                       sampled_baseline_threshold, sweep_adapted_thresholds,
                       worst_case_report)
from .meta import ScenarioSet, adapt as one_shot_adapt, train as run_train
from .pomdp import Scenario, ZeroLikelihood
from .scenarios import ingest_histogram, sample_scenarios


def _fail(exc: Exception) -> None:
    click.echo(f"error: {type(exc).__name__}: {exc}", err=True)
    sys.exit(1)


def _load(config_path: str) -> tuple:
    cfg = load_config(config_path)
    return cfg, Path(config_path).parent


def _outdir(cfg: RunConfig, override) -> Path:
    out = Path(override) if override else Path(cfg.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _write_manifest(out: Path, cfg: RunConfig, command: str,
                    outputs: list, extra: dict = None) -> None:
    manifest = {
        "command": command,
        "config_digest": cfg.digest(),
        "config": cfg.to_dict(),
        "master_seed": cfg.master_seed,
        "outputs": sorted(outputs),
        "version": __version__,
    }
    if extra:
        manifest.update(extra)
    # The timestamp is the only non-reproducible field.
    manifest["timestamp"] = datetime.now(timezone.utc).isoformat()
    (out / "manifest.json").write_text(
        json.dumps(manifest, indent=2, sort_keys=True) + "\n", encoding="utf-8")


def _write_csv(path: Path, header: list, rows: list) -> None:
    with open(path, "w", newline="", encoding="utf-8") as handle:
        writer = csv.writer(handle, lineterminator="\n")
        writer.writerow(header)
        writer.writerows(rows)


def _write_report_csv(path: Path, report) -> None:
    _write_csv(path, ["label", "mean_cost", "std_dev", "n_seeds"],
               [[r.label, repr(r.mean_cost), repr(r.std_dev), r.n_seeds]
                for r in report.rows])


def _sample_training_set(cfg: RunConfig, root: Path) -> ScenarioSet:
    dist = cfg.scenario_dist.build(root)
    rng = seeding.derived_rng(cfg.master_seed, seeding.SCENARIO_SAMPLING)
    return sample_scenarios(dist, cfg.training.n_scenarios, rng)


def _run_training(config_path: str, out_override, mode: str,
                  jobs: int = 1) -> None:
    cfg, root = _load(config_path)
    out = _outdir(cfg, out_override)
    scenario_set = _sample_training_set(cfg, root)
    tr = cfg.training
    result = run_train(
        scenario_set, cfg.pomdp, tr.schedule, mode=mode,
        batch_size=tr.batch_size, max_iters=tr.max_iters,
        master_seed=cfg.master_seed, n_rollouts=tr.n_rollouts,
        stop_window=tr.stop_window, tau_init=tr.tau_init,
        jobs=clamp_jobs(jobs))

    _write_csv(out / "history.csv", ["iter", "tau_meta", "stop_metric"],
               [[e.t, repr(e.tau_meta), repr(e.stop_metric)]
                for e in result.state.history])
    policy = {
        "tau_meta": result.tau_meta,
        "mode": mode,
        "converged": result.converged,
        "iterations": result.state.t - 1,
        "master_seed": cfg.master_seed,
        "config_digest": cfg.digest(),
        "final_weights": [float(w) for w in result.state.weights]
        if mode == "robust" else None,
    }
    (out / "policy.json").write_text(
        json.dumps(policy, indent=2, sort_keys=True) + "\n", encoding="utf-8")
    _write_manifest(out, cfg, f"train[{mode}]",
                    ["history.csv", "policy.json"],
                    extra={"converged": result.converged,
                           "tau_meta": result.tau_meta})
    click.echo(f"tau_meta={result.tau_meta!r} converged={result.converged}")
    if not result.converged:
        click.echo("error: NotConverged: max_iters reached before the "
                   "stopping rule fired", err=True)
        sys.exit(2)


def _read_policy(path: str) -> dict:
    try:
        return json.loads(Path(path).read_text(encoding="utf-8"))
    except (OSError, json.JSONDecodeError) as exc:
        raise ParseError(f"cannot read policy file {path}: {exc}")


@click.group()
@click.version_option(__version__)
def main() -> None:
    """Meta-learned trust-threshold policies for zero-trust account defense."""


@main.command()
@click.option("--config", "-c", "config_path", required=True,
              type=click.Path(exists=True))
@click.option("--out", "-o", "out_override", default=None)
@click.option("--jobs", "-j", default=1, type=int,
              help="cap on worker parallelism (clamped to available CPUs)")
def train(config_path, out_override, jobs):
    """Train a scenario-agnostic meta threshold."""
    try:
        _run_training(config_path, out_override, "agnostic", jobs=jobs)
    except (ParseError, ValidationError, ValueError, ZeroLikelihood) as exc:
        _fail(exc)


@main.command("train-robust")
@click.option("--config", "-c", "config_path", required=True,
              type=click.Path(exists=True))
@click.option("--out", "-o", "out_override", default=None)
@click.option("--jobs", "-j", default=1, type=int,
              help="cap on worker parallelism (clamped to available CPUs)")
def train_robust(config_path, out_override, jobs):
    """Train a scenario-robust meta threshold (adversarial reweighting)."""
    try:
        _run_training(config_path, out_override, "robust", jobs=jobs)
    except (ParseError, ValidationError, ValueError, ZeroLikelihood) as exc:
        _fail(exc)


@main.command("adapt")
@click.option("--config", "-c", "config_path", required=True,
              type=click.Path(exists=True))
@click.option("--tau", required=True, type=float)
@click.option("--scenario", "scenario_str", required=True,
              help="comma-separated p_a_d,p_u_d,p_a_n,p_u_n")
@click.option("--seed", default=0, type=int)
def adapt_cmd(config_path, tau, scenario_str, seed):
    """One-shot adaptation of a threshold to a named scenario."""
    try:
        cfg, _ = _load(config_path)
        parts = [float(x) for x in scenario_str.split(",")]
        if len(parts) != 4:
            raise ValidationError("scenario", "expected four comma-separated "
                                              "probabilities")
        theta = Scenario(*parts)
        schedule = cfg.training.schedule
        rng = seeding.derived_rng(seed, seeding.EVALUATION)
        tau_adapted, grad = one_shot_adapt(
            tau, theta, cfg.pomdp, schedule.eta(1), schedule.gamma, rng,
            n_rollouts=cfg.evaluation.n_rollouts)
        click.echo(json.dumps({"tau_adapted": tau_adapted, "gradient": grad}))
    except (ParseError, ValidationError, ValueError, ZeroLikelihood) as exc:
        _fail(exc)


@main.command("eval")
@click.option("--config", "-c", "config_path", required=True,
              type=click.Path(exists=True))
@click.option("--policy", "policy_path", required=True,
              type=click.Path(exists=True))
@click.option("--robust-policy", "robust_path", default=None,
              type=click.Path(exists=True),
              help="also produce an empirical/worst-case comparison report")
@click.option("--sampled-baseline", is_flag=True, default=False,
              help="also report the threshold minimizing the average cost "
                   "over the sampled test set (second baseline)")
@click.option("--out", "-o", "out_override", default=None)
@click.option("--jobs", "-j", default=1, type=int,
              help="cap on worker parallelism (clamped to available CPUs)")
def eval_cmd(config_path, policy_path, robust_path, sampled_baseline,
             out_override, jobs):
    """Evaluate a trained meta policy against the distribution-average
    baseline on a fresh test set."""
    try:
        jobs = clamp_jobs(jobs)
        cfg, root = _load(config_path)
        out = _outdir(cfg, out_override)
        policy = _read_policy(policy_path)
        tau_meta = float(policy["tau_meta"])
        dist = cfg.scenario_dist.build(root)
        ev = cfg.evaluation

        test_rng = seeding.derived_rng(cfg.master_seed, seeding.TEST_SAMPLING)
        test_set = sample_scenarios(dist, ev.test_size, test_rng)
        grid_rng = seeding.derived_rng(cfg.master_seed, seeding.EVALUATION,
                                       1000)
        tau_avg = avg_baseline_threshold(dist, cfg.pomdp,
                                         grid_step=ev.grid_step,
                                         n_rollouts=ev.n_rollouts,
                                         rng=grid_rng)

        report = evaluate_policies(tau_meta, tau_avg, test_set, cfg.pomdp,
                                   cfg.training.schedule, ev.n_seeds,
                                   master_seed=cfg.master_seed,
                                   n_rollouts=ev.n_rollouts, jobs=jobs)
        rows = list(report.rows)
        if sampled_baseline:
            sb_rng = seeding.derived_rng(cfg.master_seed, seeding.EVALUATION,
                                         1001)
            tau_sampled, _ = sampled_baseline_threshold(
                test_set, cfg.pomdp, grid_step=ev.grid_step,
                n_rollouts=ev.n_rollouts, rng=sb_rng)
            sampled_report = evaluate_policies(
                tau_meta, tau_sampled, test_set, cfg.pomdp,
                cfg.training.schedule, ev.n_seeds,
                master_seed=cfg.master_seed, n_rollouts=ev.n_rollouts,
                jobs=jobs)
            row = sampled_report.row("dist_average")
            rows.append(dataclasses.replace(row, label="sampled_average"))
            report = dataclasses.replace(report, rows=tuple(rows))
        _write_report_csv(out / "eval.csv", report)
        _write_csv(out / "eval_detail.csv",
                   ["label", "p_a_d", "p_u_d", "p_a_n", "p_u_n", "tau", "cost"],
                   [[d.label, repr(d.scenario.p_a_d), repr(d.scenario.p_u_d),
                     repr(d.scenario.p_a_n), repr(d.scenario.p_u_n),
                     repr(d.tau), repr(d.cost)] for d in report.detail])
        outputs = ["eval.csv", "eval_detail.csv"]
        extra = {"tau_avg": tau_avg, "tau_meta": tau_meta}
        if sampled_baseline:
            extra["tau_sampled"] = tau_sampled

        if robust_path:
            robust = _read_policy(robust_path)
            wc = worst_case_report(
                tau_meta, float(robust["tau_meta"]), tau_avg, test_set,
                robust.get("final_weights") or
                np.full(len(test_set), 1.0 / len(test_set)),
                cfg.pomdp, cfg.training.schedule, n_seeds=ev.n_seeds,
                master_seed=cfg.master_seed, n_rollouts=ev.n_rollouts,
                jobs=jobs)
            _write_report_csv(out / "worst_case.csv", wc)
            outputs.append("worst_case.csv")
            extra["worst_scenario_index"] = wc.provenance[
                "worst_scenario_index"]

        _write_manifest(out, cfg, "eval", outputs, extra=extra)
    except (ParseError, ValidationError, ValueError, KeyError,
            ZeroLikelihood) as exc:
        _fail(exc)


@main.command("sweep")
@click.option("--config", "-c", "config_path", required=True,
              type=click.Path(exists=True))
@click.option("--policy", "policy_path", required=True,
              type=click.Path(exists=True))
@click.option("--grid", "grid_spec", required=True,
              help="lo:hi:n grid over the configured varying parameter")
@click.option("--repeats", default=10, type=int)
@click.option("--out", "-o", "out_override", default=None)
@click.option("--jobs", "-j", default=1, type=int,
              help="cap on worker parallelism (clamped to available CPUs)")
def sweep_cmd(config_path, policy_path, grid_spec, repeats, out_override,
              jobs):
    """One-shot adapted thresholds across a grid of scenarios."""
    try:
        cfg, _ = _load(config_path)
        out = _outdir(cfg, out_override)
        policy = _read_policy(policy_path)
        tau_meta = float(policy["tau_meta"])
        try:
            lo, hi, n = grid_spec.split(":")
            lo, hi, n = float(lo), float(hi), int(n)
        except ValueError:
            raise ValidationError("grid", f"expected lo:hi:n, got {grid_spec!r}")
        spec = cfg.scenario_dist
        values = np.linspace(lo, hi, n)
        grid = [spec.base.replace(**{spec.varying_param: float(v)})
                for v in values]
        rows = sweep_adapted_thresholds(
            tau_meta, grid, cfg.pomdp, cfg.training.schedule, repeats,
            master_seed=cfg.master_seed, n_rollouts=cfg.evaluation.n_rollouts,
            jobs=clamp_jobs(jobs))
        _write_csv(out / "sweep.csv", ["param_value", "tau_mean", "tau_std"],
                   [[repr(float(v)), repr(mean), repr(std)]
                    for v, (_, mean, std) in zip(values, rows)])
        _write_manifest(out, cfg, "sweep", ["sweep.csv"],
                        extra={"grid": grid_spec, "repeats": repeats,
                               "tau_meta": tau_meta})
    except (ParseError, ValidationError, ValueError, KeyError,
            ZeroLikelihood) as exc:
        _fail(exc)


@main.command("ingest-histogram")
@click.option("--config", "-c", "config_path", required=True,
              type=click.Path(exists=True))
@click.option("--csv", "csv_path", required=True, type=click.Path(exists=True))
@click.option("--out", "-o", "out_override", default=None)
def ingest_cmd(config_path, csv_path, out_override):
    """Convert an attack-group histogram CSV into an empirical scenario
    distribution JSON."""
    try:
        cfg, _ = _load(config_path)
        out = _outdir(cfg, out_override)
        spec = cfg.scenario_dist
        rows = read_histogram_csv(csv_path)
        dist = ingest_histogram(rows, spec.varying_param, spec.lo, spec.hi,
                                spec.base)
        payload = {
            "support_points": [dataclasses.asdict(p)
                               for p in dist.support_points],
            "weights": list(dist.weights),
            "source_meta": dist.source_meta,
        }
        (out / "empirical_dist.json").write_text(
            json.dumps(payload, indent=2, sort_keys=True) + "\n",
            encoding="utf-8")
        _write_manifest(out, cfg, "ingest-histogram", ["empirical_dist.json"])
    except (ParseError, ValidationError, ValueError) as exc:
        _fail(exc)


if __name__ == "__main__":
    main()
