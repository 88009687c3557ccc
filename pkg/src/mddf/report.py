"""Machine-readable run reports.

A run report is a JSON summary document plus a line-delimited JSONL file
with one record per cascade layer, so the layer curves can be plotted or
diffed without this package. Serialization is deterministic (sorted keys),
so reruns under the same seed produce byte-identical files except for the
wall-time fields.
"""

from __future__ import annotations

import hashlib
import json
import os

from .dataset import Dataset

SCHEMA_VERSION = 1

_LAYER_REQUIRED = ("layer", "alpha", "objective", "train_accuracy", "wall_time_ms")
_STATS_REQUIRED = ("mean", "variance", "lambda_ratio", "histogram")


def file_sha256(path) -> str:
    digest = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            digest.update(chunk)
    return digest.hexdigest()


def dataset_fingerprint(data: Dataset, source_paths: list[str]) -> dict:
    return {
        "m": data.n_samples,
        "n": data.n_features,
        "s": data.n_classes,
        "source_sha256": [file_sha256(p) for p in source_paths if p and os.path.exists(p)],
    }


def build_run_report(training_report: dict, config_echo: dict, fingerprint: dict,
                     command: str, seed: int) -> dict:
    per_layer = training_report.get("per_layer", [])
    final_accuracy = training_report.get(
        "final_test_accuracy", training_report.get("final_train_accuracy")
    )
    return {
        "schema_version": SCHEMA_VERSION,
        "command": command,
        "seed": seed,
        "config": config_echo,
        "dataset": fingerprint,
        "per_layer": per_layer,
        "layers_trained": training_report.get("layers_trained", len(per_layer)),
        "layers_kept": training_report.get("layers_kept", len(per_layer)),
        "stop_reason": training_report.get("stop_reason", ""),
        "final_accuracy": final_accuracy,
    }


def write_report(report: dict, path: str) -> None:
    """Write the summary JSON at `path` and per-layer JSONL beside it."""
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(report, fh, sort_keys=True, indent=2)
        fh.write("\n")
    base, ext = os.path.splitext(path)
    layers_path = base + ".layers.jsonl"
    with open(layers_path, "w", encoding="utf-8") as fh:
        for row in report.get("per_layer", []):
            fh.write(json.dumps(row, sort_keys=True))
            fh.write("\n")


def validate_run_report(report: dict) -> None:
    """Light schema check; raises ValueError on a malformed report."""
    for key in ("schema_version", "command", "seed", "config", "dataset", "per_layer"):
        if key not in report:
            raise ValueError(f"report missing field {key!r}")
    ds = report["dataset"]
    for key in ("m", "n", "s"):
        if not isinstance(ds.get(key), int) or ds[key] < 1:
            raise ValueError(f"dataset fingerprint field {key!r} must be a positive int")
    for row in report["per_layer"]:
        for key in _LAYER_REQUIRED:
            if key not in row:
                raise ValueError(f"layer record missing field {key!r}")
        if not (0.0 <= row["train_accuracy"] <= 1.0):
            raise ValueError("train_accuracy out of [0,1]")
        if "test_accuracy" in row and not (0.0 <= row["test_accuracy"] <= 1.0):
            raise ValueError("test_accuracy out of [0,1]")
        for stats_key in ("margin_cumulative_train", "margin_prediction_train"):
            stats = row.get(stats_key)
            if stats is not None:
                for key in _STATS_REQUIRED:
                    if key not in stats:
                        raise ValueError(f"{stats_key} missing field {key!r}")
