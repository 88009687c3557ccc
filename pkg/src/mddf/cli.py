"""Command-line front end: train, evaluate, grid-search, export-features,
and the oracle self-check.

Exit codes: 0 success, 2 configuration error, 3 data error, 4 runtime error.
"""

from __future__ import annotations

import functools
import itertools
import json
import sys

import click
import numpy as np

from . import model_io
from .cascade import (
    BaselineForest,
    CascadeConfig,
    evaluate_prefixes,
    layer_representations,
    predict_scores_batch,
    train,
    train_baseline_forest,
)
from .dataset import Dataset, SplitSpec, parse_csv, parse_libsvm, split
from .errors import ConfigError, DataError, MddfError
from .forest import predict_forest_batch
from .margin import GAMMA_GRID, MU_GRID, MdLossParams
from .report import build_run_report, dataset_fingerprint, validate_run_report, write_report

DEPTH_CHOICES = ("2t+2", "4t+4", "8t+8", "16t+16")
MODE_CHOICES = ("full", "same_forests", "stacking_only", "no_preconc", "baseline_rf")


def exit_codes(fn):
    """Map package exceptions onto the documented exit codes."""

    @functools.wraps(fn)
    def wrapper(*args, **kwargs):
        try:
            return fn(*args, **kwargs)
        except ConfigError as exc:
            click.echo(f"config error: {exc}", err=True)
            sys.exit(2)
        except DataError as exc:
            click.echo(f"data error: {exc}", err=True)
            sys.exit(3)
        except MddfError as exc:
            click.echo(f"error: {exc}", err=True)
            sys.exit(4)

    return wrapper


def _load_dataset(path: str, fmt: str, label_col: str | None, has_header: bool,
                  delimiter: str, n_features: int | None) -> Dataset:
    if fmt == "libsvm":
        return parse_libsvm(path, n_features=n_features)
    if label_col is None:
        label_col = -1
    elif label_col.lstrip("-").isdigit():
        label_col = int(label_col)
    return parse_csv(path, label_column=label_col, has_header=has_header,
                     delimiter=delimiter, one_hot=False)


def _remap_labels(data: Dataset, model_label_names: list[str], where: str) -> np.ndarray:
    """Express parsed labels in the model's class indexing, matched by name."""
    index = {name: i for i, name in enumerate(model_label_names)}
    mapping = np.empty(data.n_classes, dtype=np.int64)
    for k, name in enumerate(data.label_names):
        if name not in index:
            raise DataError(f"{where}: label {name!r} was not present at training time")
        mapping[k] = index[name]
    return mapping[data.labels]


def data_options(fn):
    fn = click.option("--format", "fmt", type=click.Choice(["csv", "libsvm"]),
                      default="csv", show_default=True, help="Input file format.")(fn)
    fn = click.option("--label-col", default=None,
                      help="CSV label column name or index (default: last column).")(fn)
    fn = click.option("--no-header", is_flag=True, help="CSV file has no header row.")(fn)
    fn = click.option("--delimiter", default=",", show_default=True)(fn)
    fn = click.option("--n-features", type=int, default=None,
                      help="LIBSVM width override (default: max index seen).")(fn)
    return fn


def _self_check_callback(ctx, param, value):
    if not value or ctx.resilient_parsing:
        return
    failures = _run_self_check()
    ctx.exit(4 if failures else 0)


def _run_self_check() -> int:
    from .oracles import self_check

    failures = 0
    for name, ok, detail in self_check():
        click.echo(f"{'PASS' if ok else 'FAIL'}  {name}" + (f"  ({detail})" if detail else ""))
        failures += 0 if ok else 1
    return failures


@click.group()
@click.option("--self-check", is_flag=True, callback=_self_check_callback,
              expose_value=False, is_eager=True,
              help="Run the built-in oracle suite and exit.")
def main():
    """Margin-distribution deep forest trainer and tools."""


@main.command("self-check")
@exit_codes
def cmd_self_check():
    """Cross-check the fast paths against brute-force oracles."""
    failures = _run_self_check()
    if failures:
        sys.exit(4)


@main.command("train")
@click.option("--data", "data_path", required=True, type=click.Path(), help="Training file.")
@click.option("--test-data", "test_path", type=click.Path(), default=None,
              help="Optional presplit test file tracked per layer.")
@data_options
@click.option("--test-holdout", type=float, default=0.0, show_default=True,
              help="Carve a stratified test split from --data (when no --test-data).")
@click.option("--layers", type=int, default=10, show_default=True)
@click.option("--folds", type=int, default=5, show_default=True)
@click.option("--trees", type=int, default=100, show_default=True,
              help="Trees per forest (4 forests per layer).")
@click.option("--gamma", type=float, default=0.8, show_default=True)
@click.option("--mu", type=float, default=0.1, show_default=True)
@click.option("--depth-schedule", type=click.Choice(DEPTH_CHOICES), default="4t+4",
              show_default=True)
@click.option("--mode", type=click.Choice(MODE_CHOICES), default="full", show_default=True)
@click.option("--patience", type=int, default=2, show_default=True)
@click.option("--validation-fraction", type=float, default=0.0, show_default=True,
              help="Holdout share used for early stopping (0 = training objective).")
@click.option("--seed", type=int, default=42, show_default=True)
@click.option("--threads", type=int, default=1, show_default=True)
@click.option("--out-model", required=True, type=click.Path())
@click.option("--out-report", required=True, type=click.Path())
@exit_codes
def cmd_train(data_path, test_path, fmt, label_col, no_header, delimiter, n_features,
              test_holdout, layers, folds, trees, gamma, mu, depth_schedule, mode,
              patience, validation_fraction, seed, threads, out_model, out_report):
    """Train a cascade (or the single-forest baseline) and write model + report."""
    train_set = _load_dataset(data_path, fmt, label_col, not no_header, delimiter, n_features)
    test_set = None
    if test_path:
        test_width = (n_features or train_set.n_features) if fmt == "libsvm" else None
        test_set = _load_dataset(test_path, fmt, label_col, not no_header, delimiter, test_width)
        test_set.labels = _remap_labels(test_set, train_set.label_names, test_path)
        test_set.n_classes = train_set.n_classes
        test_set.label_names = list(train_set.label_names)
    elif test_holdout > 0.0:
        train_set, test_set = split(train_set, SplitSpec("stratified_holdout", test_holdout, seed))

    config_echo = {
        "data": data_path,
        "test_data": test_path,
        "format": fmt,
        "mode": mode,
        "layers": layers,
        "folds": folds,
        "trees": trees,
        "gamma": gamma,
        "mu": mu,
        "depth_schedule": depth_schedule,
        "patience": patience,
        "validation_fraction": validation_fraction,
        "test_holdout": test_holdout,
        "seed": seed,
    }
    sources = [p for p in (data_path, test_path) if p]
    fingerprint = dataset_fingerprint(train_set, sources)

    if mode == "baseline_rf":
        model = train_baseline_forest(train_set, n_trees=400 * folds, seed=seed, n_jobs=threads)
        if test_set is not None:
            scores = predict_forest_batch(model.forest, test_set.features)
            model.training_report["test_accuracy"] = float(
                (scores.argmax(axis=1) == test_set.labels).mean()
            )
            model.training_report["final_test_accuracy"] = model.training_report["test_accuracy"]
        report = build_run_report(model.training_report, config_echo, fingerprint,
                                  "train", seed)
        report["final_accuracy"] = model.training_report.get(
            "final_test_accuracy", model.training_report["train_accuracy"]
        )
    else:
        config = CascadeConfig(
            max_layers=layers,
            k_folds=folds,
            n_trees=trees,
            loss=MdLossParams(gamma=gamma, mu=mu),
            depth_schedule=depth_schedule,
            mode=mode,
            early_stop_patience=patience,
            validation_fraction=validation_fraction,
            n_jobs=threads,
            seed=seed,
        )
        config.validate()
        model = train(train_set, config, test_data=test_set)
        report = build_run_report(model.training_report, config_echo, fingerprint,
                                  "train", seed)
        validate_run_report(report)

    model_io.save(model, out_model)
    write_report(report, out_report)
    click.echo(f"model written to {out_model}")
    click.echo(f"report written to {out_report}")
    if report.get("final_accuracy") is not None:
        click.echo(f"final accuracy: {report['final_accuracy']:.4f}")


@main.command("evaluate")
@click.option("--model", "model_path", required=True, type=click.Path())
@click.option("--data", "data_path", required=True, type=click.Path())
@data_options
@click.option("--out-report", required=True, type=click.Path())
@exit_codes
def cmd_evaluate(model_path, data_path, fmt, label_col, no_header, delimiter,
                 n_features, out_report):
    """Score a saved model on a dataset; writes accuracy, confusion counts,
    and per-layer-prefix margin statistics."""
    model = model_io.load(model_path)
    width = (n_features or model.raw_dim) if fmt == "libsvm" else None
    data = _load_dataset(data_path, fmt, label_col, not no_header, delimiter, width)
    if data.n_features != model.raw_dim:
        raise DataError(
            f"{data_path} has {data.n_features} features, model expects {model.raw_dim}"
        )
    labels = _remap_labels(data, model.label_names, data_path)
    s = model.n_classes

    metrics: dict = {"model": model_path, "data": data_path, "n_samples": data.n_samples}
    if isinstance(model, BaselineForest):
        scores = predict_forest_batch(model.forest, data.features)
        pred = scores.argmax(axis=1)
        metrics["kind"] = "baseline_forest"
    else:
        pred = predict_scores_batch(model, data.features).argmax(axis=1)
        metrics["kind"] = "mddf_cascade"
        metrics["per_layer"] = evaluate_prefixes(model, data.features, labels)

    confusion = np.zeros((s, s), dtype=np.int64)
    np.add.at(confusion, (labels, pred), 1)
    metrics["accuracy"] = float((pred == labels).mean())
    metrics["confusion"] = confusion.tolist()
    metrics["label_names"] = list(model.label_names)

    with open(out_report, "w", encoding="utf-8") as fh:
        json.dump(metrics, fh, sort_keys=True, indent=2)
        fh.write("\n")
    click.echo(f"accuracy: {metrics['accuracy']:.4f}")
    click.echo(f"metrics written to {out_report}")


@main.command("grid-search")
@click.option("--data", "data_path", required=True, type=click.Path())
@data_options
@click.option("--gammas", default=",".join(str(g) for g in GAMMA_GRID), show_default=True,
              help="Comma-separated target-margin candidates.")
@click.option("--mus", default=",".join(str(m) for m in MU_GRID), show_default=True,
              help="Comma-separated deviation trade-off candidates.")
@click.option("--depth-schedules", default=",".join(DEPTH_CHOICES), show_default=True)
@click.option("--valid-fraction", type=float, default=0.2, show_default=True,
              help="Stratified holdout used to score candidates.")
@click.option("--layers", type=int, default=10, show_default=True)
@click.option("--folds", type=int, default=5, show_default=True)
@click.option("--trees", type=int, default=100, show_default=True)
@click.option("--mode", type=click.Choice(MODE_CHOICES[:4]), default="full", show_default=True)
@click.option("--patience", type=int, default=2, show_default=True)
@click.option("--seed", type=int, default=42, show_default=True)
@click.option("--threads", type=int, default=1, show_default=True)
@click.option("--out-report", required=True, type=click.Path())
@exit_codes
def cmd_grid_search(data_path, fmt, label_col, no_header, delimiter, n_features,
                    gammas, mus, depth_schedules, valid_fraction, layers, folds, trees,
                    mode, patience, seed, threads, out_report):
    """Exhaustively score every (gamma, mu, depth schedule) combination on a
    held-out split; ties break to smaller gamma, then smaller mu, then the
    shallower schedule."""
    gamma_list = _parse_float_list(gammas, "gammas")
    mu_list = _parse_float_list(mus, "mus")
    schedule_list = [s.strip() for s in depth_schedules.split(",") if s.strip()]
    for sched in schedule_list:
        if sched not in DEPTH_CHOICES:
            raise ConfigError(f"unknown depth schedule {sched!r}")
    if not (0.0 < valid_fraction < 1.0):
        raise ConfigError("valid-fraction must be in (0,1)")

    data = _load_dataset(data_path, fmt, label_col, not no_header, delimiter, n_features)
    fit_set, valid_set = split(data, SplitSpec("stratified_holdout", valid_fraction, seed))

    candidates = []
    for gamma, mu, sched in itertools.product(gamma_list, mu_list, schedule_list):
        config = CascadeConfig(
            max_layers=layers,
            k_folds=folds,
            n_trees=trees,
            loss=MdLossParams(gamma=gamma, mu=mu),
            depth_schedule=sched,
            mode=mode,
            early_stop_patience=patience,
            n_jobs=threads,
            seed=seed,
        )
        config.validate()
        model = train(fit_set, config)
        pred = predict_scores_batch(model, valid_set.features).argmax(axis=1)
        accuracy = float((pred == valid_set.labels).mean())
        candidates.append({
            "gamma": gamma,
            "mu": mu,
            "depth_schedule": sched,
            "validation_accuracy": accuracy,
            "layers_kept": model.n_layers,
        })
        click.echo(
            f"gamma={gamma} mu={mu} schedule={sched}: "
            f"validation accuracy {accuracy:.4f}"
        )

    schedule_rank = {sched: i for i, sched in enumerate(DEPTH_CHOICES)}
    best = min(
        candidates,
        key=lambda c: (-c["validation_accuracy"], c["gamma"], c["mu"],
                       schedule_rank[c["depth_schedule"]]),
    )
    result = {
        "command": "grid-search",
        "data": data_path,
        "seed": seed,
        "valid_fraction": valid_fraction,
        "n_candidates": len(candidates),
        "candidates": candidates,
        "best": best,
    }
    with open(out_report, "w", encoding="utf-8") as fh:
        json.dump(result, fh, sort_keys=True, indent=2)
        fh.write("\n")
    click.echo(
        f"best: gamma={best['gamma']} mu={best['mu']} "
        f"schedule={best['depth_schedule']} "
        f"(validation accuracy {best['validation_accuracy']:.4f})"
    )


@main.command("export-features")
@click.option("--model", "model_path", required=True, type=click.Path())
@click.option("--data", "data_path", required=True, type=click.Path())
@data_options
@click.option("--out-dir", required=True, type=click.Path())
@exit_codes
def cmd_export_features(model_path, data_path, fmt, label_col, no_header, delimiter,
                        n_features, out_dir):
    """Write the per-layer concatenated representation [x, f_t(x)] as CSV,
    one file per layer, for external embedding tools."""
    import os

    model = model_io.load(model_path)
    if isinstance(model, BaselineForest):
        raise DataError("feature export needs a cascade model, not the baseline forest")
    width = (n_features or model.raw_dim) if fmt == "libsvm" else None
    data = _load_dataset(data_path, fmt, label_col, not no_header, delimiter, width)
    if data.n_features != model.raw_dim:
        raise DataError(
            f"{data_path} has {data.n_features} features, model expects {model.raw_dim}"
        )
    os.makedirs(out_dir, exist_ok=True)
    feature_names = model.feature_names or [f"x{j}" for j in range(model.raw_dim)]
    score_names = [f"score_{name}" for name in model.label_names] or [
        f"score_{j}" for j in range(model.n_classes)
    ]
    header = ",".join(list(feature_names) + score_names)
    for t, matrix in enumerate(layer_representations(model, data.features), start=1):
        out_path = os.path.join(out_dir, f"layer_{t:02d}.csv")
        with open(out_path, "w", encoding="utf-8") as fh:
            fh.write(header + "\n")
            for row in matrix:
                fh.write(",".join(repr(float(v)) for v in row) + "\n")
        click.echo(f"wrote {out_path} ({matrix.shape[0]} x {matrix.shape[1]})")


def _parse_float_list(text: str, name: str) -> list[float]:
    try:
        values = [float(tok) for tok in text.split(",") if tok.strip()]
    except ValueError:
        raise ConfigError(f"--{name} must be a comma-separated list of numbers") from None
    if not values:
        raise ConfigError(f"--{name} must not be empty")
    return values


if __name__ == "__main__":
    main()
