"""Command-line surface: reproducible experiments writing CSV + manifest.

Option precedence: command-line flags > --config JSON file > built-in
defaults. A config file may set top-level option defaults and per-command
sections, e.g. {"seed": 7, "identify": {"reps": 50}}.
"""

from __future__ import annotations

import datetime as dt
import functools
import json
import sys
from dataclasses import replace
from pathlib import Path

import click

from . import __version__
from .errors import MetaprintError
from .evaluate import ExperimentConfig, bootstrap_run, scaling_sweep, timing_benchmark
from .ingest import filter_min_tweets, read_jsonl, write_jsonl, write_rejections
from .learn import ALGORITHMS, HyperParams
from .model import UTC, combination_from_names
from .privacy import (
    DEFAULT_FRACTIONS,
    MECHANISMS,
    ObfuscationSchedule,
    obfuscation_sweep,
)
from .reporting import combination_label, write_csv, write_manifest
from .scale import partition_benchmark
from .select import entropy_table, wrapper_search
from .synth import PopulationSpec, generate_population

_GLOBAL_DEFAULTS = {"seed": 0, "workers": 1, "out_dir": "."}

REPORT_COLUMNS = (
    "experiment_id",
    "algorithm",
    "u",
    "n",
    "combination",
    "per_user",
    "repetitions",
    "metric",
    "mean",
    "ci95_half_width",
)


def _ints(text: str) -> list[int]:
    return [int(part) for part in str(text).split(",") if part.strip()]


def _floats(text: str) -> list[float]:
    return [float(part) for part in str(text).split(",") if part.strip()]


def _parse_date(text: str) -> dt.datetime:
    return dt.datetime.strptime(text, "%Y-%m-%d").replace(tzinfo=UTC)


def global_options(fn):
    fn = click.option("--seed", type=int, default=None, help="Master seed. [default: 0]")(fn)
    fn = click.option(
        "--workers", type=int, default=None, help="Parallelism cap; results are identical for any value. [default: 1]"
    )(fn)
    fn = click.option("--out-dir", type=click.Path(file_okay=False), default=None, help="Output directory. [default: .]")(fn)
    fn = click.option(
        "--config", "config_path", type=click.Path(exists=True, dir_okay=False), default=None, help="JSON config file."
    )(fn)
    return fn


def hyper_options(fn):
    fn = click.option("--knn-k", type=int, default=None, help="Nearest neighbors. [default: 1]")(fn)
    fn = click.option(
        "--knn-standardize/--no-knn-standardize", default=None, help="Z-score features for kNN. [default: off]"
    )(fn)
    fn = click.option("--rf-trees", type=int, default=None, help="Forest size. [default: 10]")(fn)
    fn = click.option("--mlr-l2", type=float, default=None, help="L2 penalty strength. [default: 1.0]")(fn)
    fn = click.option("--mlr-tol", type=float, default=None, help="Gradient tolerance. [default: 1e-4]")(fn)
    fn = click.option("--mlr-max-iter", type=int, default=None, help="Optimizer iteration cap. [default: 100]")(fn)
    fn = click.option("--lbfgs-memory", type=int, default=None, help="Curvature pairs kept. [default: 10]")(fn)
    return fn


_HYPER_DEFAULTS = {
    "knn_k": 1,
    "knn_standardize": False,
    "rf_trees": 10,
    "mlr_l2": 1.0,
    "mlr_tol": 1e-4,
    "mlr_max_iter": 100,
    "lbfgs_memory": 10,
}


def resolve_options(command: str, cli_values: dict, defaults: dict) -> dict:
    """flags > config-file section > config-file top level > defaults."""
    config_path = cli_values.pop("config_path", None)
    file_cfg: dict = {}
    if config_path:
        with open(config_path, "r", encoding="utf-8") as fh:
            file_cfg = json.load(fh)
    section = file_cfg.get(command, {})
    resolved = {}
    for key, default in {**_GLOBAL_DEFAULTS, **defaults}.items():
        if cli_values.get(key) is not None:
            resolved[key] = cli_values[key]
        elif key in section:
            resolved[key] = section[key]
        elif key in file_cfg and not isinstance(file_cfg[key], dict):
            resolved[key] = file_cfg[key]
        else:
            resolved[key] = default
    return resolved


def build_params(algo: str, opts: dict, seed: int) -> HyperParams:
    return HyperParams(
        algorithm=algo,
        knn_k=opts["knn_k"],
        knn_standardize=opts["knn_standardize"],
        rf_trees=opts["rf_trees"],
        mlr_l2=opts["mlr_l2"],
        mlr_tol=opts["mlr_tol"],
        mlr_max_iter=opts["mlr_max_iter"],
        lbfgs_memory=opts["lbfgs_memory"],
        seed=seed,
    )


def _out_dir(opts: dict) -> Path:
    path = Path(opts["out_dir"])
    path.mkdir(parents=True, exist_ok=True)
    return path


def emit_manifest(out_dir: Path, command: str, opts: dict, outputs: list[str]) -> Path:
    payload = {
        "tool": "metaprint",
        "version": __version__,
        "command": command,
        "parameters": {k: v for k, v in sorted(opts.items())},
        "outputs": outputs,
    }
    path = out_dir / f"{command}.manifest.json"
    write_manifest(path, payload)
    return path


def handle_errors(fn):
    @functools.wraps(fn)
    def wrapper(*args, **kwargs):
        try:
            return fn(*args, **kwargs)
        except (MetaprintError, ValueError, OSError) as exc:
            click.echo(
                json.dumps({"error": type(exc).__name__, "message": str(exc)}),
                err=True,
            )
            sys.exit(1)

    return wrapper


def report_rows(experiment_id: str, config: ExperimentConfig, report) -> list[list]:
    rows = []
    for metric, stat in report.metric_items():
        rows.append(
            [
                experiment_id,
                config.params.algorithm,
                config.u,
                config.n,
                combination_label(config.combination),
                config.per_user,
                config.repetitions,
                metric,
                stat.mean,
                stat.ci_half_width,
            ]
        )
    return rows


@click.group()
@click.version_option(version=__version__, prog_name="metaprint")
def cli() -> None:
    """Metadata fingerprinting experiments: identification, feature
    search, obfuscation resistance, and partitioned-classification
    benchmarks. Every command is deterministic under --seed."""


@cli.command()
@click.option("--users", type=int, default=None, help="Accounts to generate. [default: 100]")
@click.option("--tweets", type=int, default=None, help="Records per account. [default: 200]")
@click.option("--sep", type=float, default=None, help="Inter-user separability (noise units). [default: 4.0]")
@click.option("--walk-step", type=float, default=None, help="Per-record counter drift. [default: 0.5]")
@click.option("--geo-prob", type=float, default=None, help="P(geo_enabled) per account. [default: 0.45]")
@click.option("--verified-prob", type=float, default=None, help="P(verified) per account. [default: 0.015]")
@click.option("--hour-concentration", type=float, default=None, help="Posting-hour similarity across users. [default: 8.0]")
@click.option("--epoch-start", default=None, help="Account-creation window start (YYYY-MM-DD). [default: 2008-01-01]")
@click.option("--epoch-end", default=None, help="Account-creation window end (YYYY-MM-DD). [default: 2016-01-01]")
@click.option("-o", "--output", default=None, help="Output JSONL name. [default: population.jsonl]")
@global_options
@handle_errors
def generate(**cli_values) -> None:
    """Generate a synthetic population (JSON lines)."""
    opts = resolve_options(
        "generate",
        cli_values,
        {
            "users": 100,
            "tweets": 200,
            "sep": 4.0,
            "walk_step": 0.5,
            "geo_prob": 0.45,
            "verified_prob": 0.015,
            "hour_concentration": 8.0,
            "epoch_start": "2008-01-01",
            "epoch_end": "2016-01-01",
            "output": "population.jsonl",
        },
    )
    spec = PopulationSpec(
        users=opts["users"],
        tweets_per_user=opts["tweets"],
        separability=opts["sep"],
        counter_walk_step=opts["walk_step"],
        geo_prob=opts["geo_prob"],
        verified_prob=opts["verified_prob"],
        hour_concentration=opts["hour_concentration"],
        epoch_range=(_parse_date(opts["epoch_start"]), _parse_date(opts["epoch_end"])),
        seed=opts["seed"],
    )
    out_dir = _out_dir(opts)
    data = generate_population(spec)
    out_path = out_dir / opts["output"]
    write_jsonl(data.records, out_path)
    emit_manifest(out_dir, "generate", opts, [opts["output"]])
    click.echo(f"wrote {len(data)} records for {data.n_users} users to {out_path}")


@cli.command()
@click.option("--data", required=True, type=click.Path(exists=True, dir_okay=False), help="Input JSONL file.")
@click.option("--min-tweets", type=int, default=None, help="Keep users with at least this many records. [default: 201]")
@click.option("--max-malformed-fraction", type=float, default=None, help="Reject the stream above this bad-line fraction. [default: 0.01]")
@click.option("-o", "--output", default=None, help="Cleaned JSONL name. [default: clean.jsonl]")
@global_options
@handle_errors
def ingest(**cli_values) -> None:
    """Validate, filter, and canonicalize a JSONL dataset."""
    opts = resolve_options(
        "ingest",
        cli_values,
        {
            "data": None,
            "min_tweets": 201,
            "max_malformed_fraction": 0.01,
            "output": "clean.jsonl",
        },
    )
    out_dir = _out_dir(opts)
    result = read_jsonl(opts["data"], max_malformed_fraction=opts["max_malformed_fraction"])
    filtered = filter_min_tweets(result.dataset, opts["min_tweets"])
    out_path = out_dir / opts["output"]
    rejects_name = "rejected.csv"
    write_jsonl(filtered.records, out_path)
    write_rejections(result.rejected, out_dir / rejects_name)
    emit_manifest(out_dir, "ingest", opts, [opts["output"], rejects_name])
    click.echo(
        f"kept {len(filtered)} records / {filtered.n_users} users "
        f"(parsed {len(result.dataset)}, rejected {len(result.rejected)} lines)"
    )


@cli.command()
@click.option("--data", required=True, type=click.Path(exists=True, dir_okay=False), help="Input JSONL file.")
@click.option("-o", "--output", default=None, help="Output CSV name. [default: entropy.csv]")
@global_options
@handle_errors
def entropy(**cli_values) -> None:
    """Per-feature entropy table (plus the full account-creation instant)."""
    opts = resolve_options("entropy", cli_values, {"data": None, "output": "entropy.csv"})
    out_dir = _out_dir(opts)
    data = read_jsonl(opts["data"]).dataset
    rows = entropy_table(data)
    out_path = out_dir / opts["output"]
    write_csv(out_path, ["feature", "entropy_bits"], rows)
    emit_manifest(out_dir, "entropy", opts, [opts["output"]])
    click.echo(f"wrote {len(rows)} entropy rows to {out_path}")


def _experiment_config(opts: dict, algo: str, combination) -> ExperimentConfig:
    return ExperimentConfig(
        u=opts["users"],
        combination=combination,
        per_user=opts["per_user"],
        repetitions=opts["reps"],
        split_ratio=opts["split_ratio"],
        params=build_params(algo, opts, opts["seed"]),
        top_k=tuple(_ints(opts["top_k"])),
        master_seed=opts["seed"],
    )


_EXPERIMENT_DEFAULTS = {
    "users": 100,
    "reps": 200,
    "per_user": 200,
    "split_ratio": 0.7,
    "top_k": "1,5,10",
    **_HYPER_DEFAULTS,
}


def experiment_options(fn):
    fn = click.option("--users", type=int, default=None, help="Users per model (u). [default: 100]")(fn)
    fn = click.option("--reps", type=int, default=None, help="Bootstrap repetitions. [default: 200]")(fn)
    fn = click.option("--per-user", type=int, default=None, help="Records kept per user. [default: 200]")(fn)
    fn = click.option("--split-ratio", type=float, default=None, help="Train fraction of each user's records. [default: 0.7]")(fn)
    fn = click.option("--top-k", default=None, help="Comma-separated top-k list. [default: 1,5,10]")(fn)
    return fn


@cli.command()
@click.option("--data", required=True, type=click.Path(exists=True, dir_okay=False), help="Input JSONL file.")
@click.option("--algo", type=click.Choice(ALGORITHMS), default=None, help="Classifier. [default: knn]")
@click.option("--features", default=None, help="Comma-separated feature combination. [default: friend_count,follower_count]")
@experiment_options
@hyper_options
@click.option("-o", "--output", default=None, help="Report CSV name. [default: report.csv]")
@global_options
@handle_errors
def identify(**cli_values) -> None:
    """Bootstrap identification experiment; one CSV row per metric."""
    opts = resolve_options(
        "identify",
        cli_values,
        {
            "data": None,
            "algo": "knn",
            "features": "friend_count,follower_count",
            "output": "report.csv",
            **_EXPERIMENT_DEFAULTS,
        },
    )
    out_dir = _out_dir(opts)
    data = read_jsonl(opts["data"]).dataset
    combination = combination_from_names(opts["features"].split(","))
    config = _experiment_config(opts, opts["algo"], combination)
    report = bootstrap_run(data, config, workers=opts["workers"])
    experiment_id = (
        f"identify-{opts['algo']}-u{config.u}-n{config.n}-s{opts['seed']}"
    )
    out_path = out_dir / opts["output"]
    write_csv(out_path, REPORT_COLUMNS, report_rows(experiment_id, config, report))
    emit_manifest(out_dir, "identify", opts, [opts["output"]])
    click.echo(
        f"accuracy {report.mean('accuracy'):.4f} "
        f"(+/- {report.metrics['accuracy'].ci_half_width:.4f}) -> {out_path}"
    )


@cli.command("sweep-features")
@click.option("--data", required=True, type=click.Path(exists=True, dir_okay=False), help="Input JSONL file.")
@click.option("--algo", type=click.Choice(ALGORITHMS), default=None, help="Classifier. [default: knn]")
@click.option("--levels", default=None, help="Comma-separated combination sizes. [default: 1,2,3]")
@experiment_options
@hyper_options
@click.option("-o", "--output", default=None, help="Ranking CSV name. [default: ranking.csv]")
@global_options
@handle_errors
def sweep_features(**cli_values) -> None:
    """Exhaustive wrapper search over feature combinations per level."""
    opts = resolve_options(
        "sweep-features",
        cli_values,
        {"data": None, "algo": "knn", "levels": "1,2,3", "output": "ranking.csv", **_EXPERIMENT_DEFAULTS},
    )
    out_dir = _out_dir(opts)
    data = read_jsonl(opts["data"]).dataset
    params = build_params(opts["algo"], opts, opts["seed"])
    config = _experiment_config(opts, opts["algo"], combination_from_names(["friend_count"]))
    scores = wrapper_search(
        data, params, _ints(opts["levels"]), config, workers=opts["workers"]
    )
    out_path = out_dir / opts["output"]
    write_csv(
        out_path,
        ["algorithm", "level", "combination", "mean_accuracy", "ci_half_width", "runs"],
        [
            [s.algorithm, s.level, s.combination, s.mean_accuracy, s.ci_half_width, s.runs]
            for s in scores
        ],
    )
    emit_manifest(out_dir, "sweep-features", opts, [opts["output"]])
    click.echo(f"ranked {len(scores)} combinations -> {out_path}")


@cli.command("sweep-users")
@click.option("--data", required=True, type=click.Path(exists=True, dir_okay=False), help="Input JSONL file.")
@click.option("--algo", type=click.Choice(ALGORITHMS), default=None, help="Classifier. [default: knn]")
@click.option("--features", default=None, help="Feature combination. [default: friend_count,follower_count]")
@click.option("--u-values", default=None, help="Comma-separated user-pool sizes. [default: 10,100,1000]")
@experiment_options
@hyper_options
@click.option("-o", "--output", default=None, help="Report CSV name. [default: user_sweep.csv]")
@global_options
@handle_errors
def sweep_users(**cli_values) -> None:
    """Identification accuracy for an increasing number of users."""
    opts = resolve_options(
        "sweep-users",
        cli_values,
        {
            "data": None,
            "algo": "knn",
            "features": "friend_count,follower_count",
            "u_values": "10,100,1000",
            "output": "user_sweep.csv",
            **{**_EXPERIMENT_DEFAULTS, "per_user": 10},
        },
    )
    out_dir = _out_dir(opts)
    data = read_jsonl(opts["data"]).dataset
    combination = combination_from_names(opts["features"].split(","))
    config = _experiment_config(opts, opts["algo"], combination)
    results = scaling_sweep(data, config, _ints(opts["u_values"]), workers=opts["workers"])
    rows = []
    for u, report in results:
        cfg_u = replace(config, u=u)
        experiment_id = f"sweep-users-{opts['algo']}-u{u}-n{config.n}-s{opts['seed']}"
        rows.extend(report_rows(experiment_id, cfg_u, report))
    out_path = out_dir / opts["output"]
    write_csv(out_path, REPORT_COLUMNS, rows)
    emit_manifest(out_dir, "sweep-users", opts, [opts["output"]])
    click.echo(f"swept u in {opts['u_values']} -> {out_path}")


@cli.command()
@click.option("--data", required=True, type=click.Path(exists=True, dir_okay=False), help="Input JSONL file.")
@click.option("--algo", type=click.Choice(ALGORITHMS), default=None, help="Classifier. [default: knn]")
@click.option("--features", default=None, help="Feature combination. [default: friend_count,follower_count]")
@click.option("--columns", default=None, help="Columns to perturb. [default: the full combination]")
@click.option("--mechanism", type=click.Choice(MECHANISMS), default=None, help="Obfuscation mechanism. [default: rounding_randomization]")
@click.option("--bins", type=int, default=None, help="Categories for binning. [default: 10]")
@click.option("--fractions", default=None, help="Comma-separated perturbed fractions. [default: 0.0..1.0 by 0.1]")
@experiment_options
@hyper_options
@click.option("-o", "--output", default=None, help="Sweep CSV name. [default: obfuscation.csv]")
@global_options
@handle_errors
def obfuscate(**cli_values) -> None:
    """Accuracy-vs-perturbation curve: train obfuscated, test clean."""
    opts = resolve_options(
        "obfuscate",
        cli_values,
        {
            "data": None,
            "algo": "knn",
            "features": "friend_count,follower_count",
            "columns": None,
            "mechanism": "rounding_randomization",
            "bins": 10,
            "fractions": ",".join(str(f) for f in DEFAULT_FRACTIONS),
            "output": "obfuscation.csv",
            **_EXPERIMENT_DEFAULTS,
        },
    )
    out_dir = _out_dir(opts)
    data = read_jsonl(opts["data"]).dataset
    combination = combination_from_names(opts["features"].split(","))
    columns = (
        combination
        if opts["columns"] is None
        else combination_from_names(opts["columns"].split(","))
    )
    schedule = ObfuscationSchedule(
        columns=columns,
        fractions=tuple(_floats(opts["fractions"])),
        mechanism=opts["mechanism"],
        bins=opts["bins"],
        seed=opts["seed"],
    )
    config = _experiment_config(opts, opts["algo"], combination)
    params = build_params(opts["algo"], opts, opts["seed"])
    points = obfuscation_sweep(
        data, combination, params, schedule, config, workers=opts["workers"]
    )
    out_path = out_dir / opts["output"]
    write_csv(
        out_path,
        ["mechanism", "fraction", "algorithm", "combination", "mean_accuracy", "ci_half_width"],
        [
            [
                schedule.mechanism,
                point.fraction,
                opts["algo"],
                combination,
                point.report.mean("accuracy"),
                point.report.metrics["accuracy"].ci_half_width,
            ]
            for point in points
        ],
    )
    emit_manifest(out_dir, "obfuscate", opts, [opts["output"]])
    click.echo(f"swept {len(points)} fractions -> {out_path}")


@cli.command("partition-bench")
@click.option("--data", required=True, type=click.Path(exists=True, dir_okay=False), help="Input JSONL file.")
@click.option("--algo", type=click.Choice(ALGORITHMS), default=None, help="Classifier. [default: knn]")
@click.option("--features", default=None, help="Feature combination. [default: friend_count,follower_count]")
@click.option("--subset-sizes", default=None, help="Comma-separated stage-1 subset sizes. [default: u (monolithic)]")
@experiment_options
@hyper_options
@click.option("-o", "--output", default=None, help="Benchmark CSV name. [default: partition.csv]")
@global_options
@handle_errors
def partition_bench(**cli_values) -> None:
    """Partitioned vs monolithic classification on one shared split."""
    opts = resolve_options(
        "partition-bench",
        cli_values,
        {
            "data": None,
            "algo": "knn",
            "features": "friend_count,follower_count",
            "subset_sizes": None,
            "output": "partition.csv",
            **{**_EXPERIMENT_DEFAULTS, "per_user": 10},
        },
    )
    out_dir = _out_dir(opts)
    data = read_jsonl(opts["data"]).dataset
    combination = combination_from_names(opts["features"].split(","))
    config = _experiment_config(opts, opts["algo"], combination)
    subset_sizes = (
        [config.u] if opts["subset_sizes"] is None else _ints(opts["subset_sizes"])
    )
    rows = partition_benchmark(data, config, subset_sizes)
    out_path = out_dir / opts["output"]
    write_csv(
        out_path,
        [
            "u",
            "n",
            "algorithm",
            "subset_size",
            "wall_time_train_s",
            "wall_time_predict_s",
            "accuracy",
            "precision",
            "recall",
            "f_score",
            "stage1_recall",
        ],
        [
            [
                r.u,
                r.n,
                r.algorithm,
                r.subset_size,
                r.wall_time_train_s,
                r.wall_time_predict_s,
                r.accuracy,
                r.precision,
                r.recall,
                r.f_score,
                r.stage1_recall,
            ]
            for r in rows
        ],
    )
    emit_manifest(out_dir, "partition-bench", opts, [opts["output"]])
    click.echo(f"benchmarked {len(rows)} subset sizes -> {out_path}")


@cli.command()
@click.option("--data", required=True, type=click.Path(exists=True, dir_okay=False), help="Input JSONL file.")
@click.option("--algos", default=None, help="Comma-separated classifiers. [default: knn,rf,mlr]")
@click.option("--u-values", default=None, help="Comma-separated user-pool sizes. [default: 100,1000]")
@click.option("--features", default=None, help="Feature combination. [default: friend_count,follower_count,listed_count]")
@click.option("--runs", type=int, default=None, help="Timed runs per cell (median reported). [default: 3]")
@click.option("--predict-batch", type=int, default=None, help="Query rows timed per cell. [default: 1000]")
@experiment_options
@hyper_options
@click.option("-o", "--output", default=None, help="Timing CSV name. [default: timing.csv]")
@global_options
@handle_errors
def benchmark(**cli_values) -> None:
    """Wall-clock train/predict timing grid (medians of repeated runs)."""
    opts = resolve_options(
        "benchmark",
        cli_values,
        {
            "data": None,
            "algos": "knn,rf,mlr",
            "u_values": "100,1000",
            "features": "friend_count,follower_count,listed_count",
            "runs": 3,
            "predict_batch": 1000,
            "output": "timing.csv",
            **{**_EXPERIMENT_DEFAULTS, "per_user": 10},
        },
    )
    out_dir = _out_dir(opts)
    data = read_jsonl(opts["data"]).dataset
    combination = combination_from_names(opts["features"].split(","))
    cells = []
    for algo in opts["algos"].split(","):
        for u in _ints(opts["u_values"]):
            cfg = _experiment_config({**opts, "users": u}, algo.strip(), combination)
            cells.append(cfg)
    rows = timing_benchmark(
        data, cells, runs=opts["runs"], predict_batch=opts["predict_batch"]
    )
    out_path = out_dir / opts["output"]
    write_csv(
        out_path,
        ["algorithm", "u", "n", "combination", "per_user", "runs", "train_time_s", "predict_time_s", "stable"],
        [
            [r.algorithm, r.u, r.n, r.combination, r.per_user, r.runs, r.train_time_s, r.predict_time_s, r.stable]
            for r in rows
        ],
    )
    emit_manifest(out_dir, "benchmark", opts, [opts["output"]])
    click.echo(f"timed {len(rows)} cells -> {out_path}")


def main() -> None:
    cli()


if __name__ == "__main__":
    main()
