import json

import numpy as np
import pytest
from click.testing import CliRunner

from conftest import make_blobs
from mddf import model_io
from mddf.cascade import CascadeModel, predict_scores_batch
from mddf.cli import main
from mddf.report import validate_run_report

pytestmark = pytest.mark.filterwarnings(
    "ignore:fold .* complement contains a single class"
)


def write_csv(path, X, y, label_names=("a", "b", "c")):
    with open(path, "w") as fh:
        cols = ",".join(f"x{j}" for j in range(X.shape[1]))
        fh.write(f"{cols},cls\n")
        for row, label in zip(X, y):
            fh.write(",".join(repr(float(v)) for v in row) + f",{label_names[label]}\n")
    return str(path)


@pytest.fixture
def csv_pair(tmp_path):
    X, y = make_blobs(m=36, n=3, s=2, seed=31, spread=0.4)
    train_path = write_csv(tmp_path / "train.csv", X[:24], y[:24])
    test_path = write_csv(tmp_path / "test.csv", X[24:], y[24:])
    return train_path, test_path


TINY = ["--layers", "2", "--folds", "2", "--trees", "3", "--seed", "5"]


def run(args):
    return CliRunner().invoke(main, args, catch_exceptions=False)


class TestTrain:
    def test_happy_path(self, csv_pair, tmp_path):
        train_path, test_path = csv_pair
        model_path = str(tmp_path / "m.mddf")
        report_path = str(tmp_path / "r.json")
        result = run([
            "train", "--data", train_path, "--test-data", test_path,
            "--label-col", "cls", "--gamma", "0.8", "--mu", "0.1",
            *TINY, "--out-model", model_path, "--out-report", report_path,
        ])
        assert result.exit_code == 0, result.output
        report = json.loads(open(report_path).read())
        validate_run_report(report)
        assert report["config"]["gamma"] == 0.8
        assert 0.0 <= report["final_accuracy"] <= 1.0
        model = model_io.load(model_path)
        assert isinstance(model, CascadeModel)
        # jsonl sidecar has one record per kept layer
        lines = open(report_path.replace(".json", ".layers.jsonl")).read().splitlines()
        assert len(lines) == report["layers_kept"]

    def test_invalid_gamma_exits_2(self, csv_pair, tmp_path):
        train_path, _ = csv_pair
        result = run([
            "train", "--data", train_path, "--label-col", "cls",
            "--gamma", "1.5", *TINY,
            "--out-model", str(tmp_path / "m.mddf"),
            "--out-report", str(tmp_path / "r.json"),
        ])
        assert result.exit_code == 2

    def test_missing_file_exits_3(self, tmp_path):
        result = run([
            "train", "--data", str(tmp_path / "absent.csv"), *TINY,
            "--out-model", str(tmp_path / "m.mddf"),
            "--out-report", str(tmp_path / "r.json"),
        ])
        assert result.exit_code == 3

    def test_mode_echoed_in_report(self, csv_pair, tmp_path):
        train_path, _ = csv_pair
        report_path = str(tmp_path / "r.json")
        result = run([
            "train", "--data", train_path, "--label-col", "cls",
            "--mode", "stacking_only", *TINY,
            "--out-model", str(tmp_path / "m.mddf"), "--out-report", report_path,
        ])
        assert result.exit_code == 0, result.output
        report = json.loads(open(report_path).read())
        assert report["config"]["mode"] == "stacking_only"

    def test_baseline_rf_mode(self, csv_pair, tmp_path):
        train_path, test_path = csv_pair
        model_path = str(tmp_path / "b.mddf")
        result = run([
            "train", "--data", train_path, "--test-data", test_path,
            "--label-col", "cls", "--mode", "baseline_rf",
            "--folds", "2", "--seed", "5",
            "--out-model", model_path, "--out-report", str(tmp_path / "r.json"),
        ])
        assert result.exit_code == 0, result.output
        model = model_io.load(model_path)
        assert len(model.forest.trees) == 400 * 2  # 400 * k

    def test_report_reproducible_modulo_wall_time(self, csv_pair, tmp_path):
        train_path, test_path = csv_pair
        blobs = []
        for tag in ("one", "two"):
            report_path = str(tmp_path / f"r_{tag}.json")
            result = run([
                "train", "--data", train_path, "--test-data", test_path,
                "--label-col", "cls", *TINY,
                "--out-model", str(tmp_path / f"m_{tag}.mddf"),
                "--out-report", report_path,
            ])
            assert result.exit_code == 0, result.output
            report = json.loads(open(report_path).read())
            for row in report["per_layer"]:
                row["wall_time_ms"] = None
            blobs.append(json.dumps(report, sort_keys=True))
        assert blobs[0] == blobs[1]


class TestEvaluate:
    def test_memorizing_model_reaches_one(self, tmp_path):
        # well-separated training data: evaluating on the training file of a
        # deep model must reach accuracy 1.0
        X, y = make_blobs(m=30, n=3, s=2, seed=32, spread=0.2)
        train_path = write_csv(tmp_path / "train.csv", X, y)
        model_path = str(tmp_path / "m.mddf")
        metrics_path = str(tmp_path / "eval.json")
        result = run([
            "train", "--data", train_path, "--label-col", "cls", *TINY,
            "--out-model", model_path, "--out-report", str(tmp_path / "r.json"),
        ])
        assert result.exit_code == 0, result.output
        result = run([
            "evaluate", "--model", model_path, "--data", train_path,
            "--label-col", "cls", "--out-report", metrics_path,
        ])
        assert result.exit_code == 0, result.output
        metrics = json.loads(open(metrics_path).read())
        assert metrics["accuracy"] == 1.0
        confusion = np.asarray(metrics["confusion"])
        assert confusion.sum() == 30
        assert np.trace(confusion) == 30
        assert len(metrics["per_layer"]) >= 1

    def test_evaluate_baseline_model(self, csv_pair, tmp_path):
        train_path, test_path = csv_pair
        model_path = str(tmp_path / "b.mddf")
        run([
            "train", "--data", train_path, "--label-col", "cls",
            "--mode", "baseline_rf", "--folds", "2", "--trees", "2", "--seed", "5",
            "--out-model", model_path, "--out-report", str(tmp_path / "r.json"),
        ])
        metrics_path = str(tmp_path / "eval.json")
        result = run([
            "evaluate", "--model", model_path, "--data", test_path,
            "--label-col", "cls", "--out-report", metrics_path,
        ])
        assert result.exit_code == 0, result.output
        metrics = json.loads(open(metrics_path).read())
        assert metrics["kind"] == "baseline_forest"
        assert "per_layer" not in metrics
        assert 0.0 <= metrics["accuracy"] <= 1.0

    def test_feature_count_mismatch_exits_3(self, csv_pair, tmp_path):
        train_path, _ = csv_pair
        model_path = str(tmp_path / "m.mddf")
        run([
            "train", "--data", train_path, "--label-col", "cls", *TINY,
            "--out-model", model_path, "--out-report", str(tmp_path / "r.json"),
        ])
        X, y = make_blobs(m=10, n=4, s=2, seed=33)  # one extra column
        wide_path = write_csv(tmp_path / "wide.csv", X, y)
        result = run([
            "evaluate", "--model", model_path, "--data", wide_path,
            "--label-col", "cls", "--out-report", str(tmp_path / "e.json"),
        ])
        assert result.exit_code == 3

    def test_prefix_accuracy_matches_training_report(self, csv_pair, tmp_path):
        train_path, test_path = csv_pair
        model_path = str(tmp_path / "m.mddf")
        report_path = str(tmp_path / "r.json")
        run([
            "train", "--data", train_path, "--test-data", test_path,
            "--label-col", "cls", *TINY,
            "--out-model", model_path, "--out-report", report_path,
        ])
        metrics_path = str(tmp_path / "eval.json")
        run([
            "evaluate", "--model", model_path, "--data", test_path,
            "--label-col", "cls", "--out-report", metrics_path,
        ])
        report = json.loads(open(report_path).read())
        metrics = json.loads(open(metrics_path).read())
        assert metrics["accuracy"] == pytest.approx(report["final_accuracy"])
        assert metrics["per_layer"][-1]["accuracy"] == pytest.approx(
            report["per_layer"][-1]["test_accuracy"]
        )


class TestGridSearch:
    def test_single_point_grid_returns_it(self, csv_pair, tmp_path):
        train_path, _ = csv_pair
        out = str(tmp_path / "grid.json")
        result = run([
            "grid-search", "--data", train_path, "--label-col", "cls",
            "--gammas", "0.8", "--mus", "0.1", "--depth-schedules", "4t+4",
            "--layers", "1", "--folds", "2", "--trees", "3",
            "--valid-fraction", "0.25", "--seed", "5", "--out-report", out,
        ])
        assert result.exit_code == 0, result.output
        report = json.loads(open(out).read())
        assert report["n_candidates"] == 1
        assert report["best"]["gamma"] == 0.8
        assert report["best"]["mu"] == 0.1

    def test_enumerates_product_once_each(self, csv_pair, tmp_path):
        train_path, _ = csv_pair
        out = str(tmp_path / "grid.json")
        result = run([
            "grid-search", "--data", train_path, "--label-col", "cls",
            "--gammas", "0.7,0.9", "--mus", "0.05,0.1",
            "--depth-schedules", "2t+2,4t+4",
            "--layers", "1", "--folds", "2", "--trees", "2",
            "--valid-fraction", "0.25", "--seed", "5", "--out-report", out,
        ])
        assert result.exit_code == 0, result.output
        report = json.loads(open(out).read())
        assert report["n_candidates"] == 8
        combos = {(c["gamma"], c["mu"], c["depth_schedule"]) for c in report["candidates"]}
        assert len(combos) == 8

    def test_best_replays_identically(self, csv_pair, tmp_path):
        # retraining the winning configuration on the same carved split
        # reproduces the reported accuracy exactly
        from mddf.cascade import CascadeConfig, train as train_fn
        from mddf.dataset import SplitSpec, parse_csv, split
        from mddf.margin import MdLossParams

        train_path, _ = csv_pair
        out = str(tmp_path / "grid.json")
        result = run([
            "grid-search", "--data", train_path, "--label-col", "cls",
            "--gammas", "0.8", "--mus", "0.1", "--depth-schedules", "4t+4",
            "--layers", "1", "--folds", "2", "--trees", "3",
            "--valid-fraction", "0.25", "--seed", "5", "--out-report", out,
        ])
        assert result.exit_code == 0, result.output
        report = json.loads(open(out).read())
        best = report["best"]

        data = parse_csv(train_path, label_column="cls")
        fit_set, valid_set = split(data, SplitSpec("stratified_holdout", 0.25, seed=5))
        config = CascadeConfig(
            max_layers=1, k_folds=2, n_trees=3,
            loss=MdLossParams(gamma=best["gamma"], mu=best["mu"]),
            depth_schedule=best["depth_schedule"], seed=5,
        )
        model = train_fn(fit_set, config)
        pred = predict_scores_batch(model, valid_set.features).argmax(axis=1)
        accuracy = float((pred == valid_set.labels).mean())
        assert accuracy == pytest.approx(best["validation_accuracy"])

    def test_tie_breaks_to_smaller_gamma(self, tmp_path):
        # trivially separable data: every candidate reaches the same holdout
        # accuracy, so the winner must be the smallest gamma
        X, y = make_blobs(m=40, n=2, s=2, seed=35, spread=0.15)
        train_path = write_csv(tmp_path / "sep.csv", X, y)
        out = str(tmp_path / "grid.json")
        result = run([
            "grid-search", "--data", train_path, "--label-col", "cls",
            "--gammas", "0.9,0.7", "--mus", "0.1", "--depth-schedules", "4t+4",
            "--layers", "1", "--folds", "2", "--trees", "3",
            "--valid-fraction", "0.25", "--seed", "5", "--out-report", out,
        ])
        assert result.exit_code == 0, result.output
        report = json.loads(open(out).read())
        accs = {c["validation_accuracy"] for c in report["candidates"]}
        if len(accs) == 1:  # the tie this test is about
            assert report["best"]["gamma"] == 0.7

    def test_default_grid_is_the_full_product(self):
        from mddf.cli import DEPTH_CHOICES
        from mddf.margin import GAMMA_GRID, MU_GRID

        assert len(GAMMA_GRID) * len(MU_GRID) * len(DEPTH_CHOICES) == 72

    def test_bad_schedule_exits_2(self, csv_pair, tmp_path):
        train_path, _ = csv_pair
        result = run([
            "grid-search", "--data", train_path, "--label-col", "cls",
            "--depth-schedules", "5t+5", "--out-report", str(tmp_path / "g.json"),
        ])
        assert result.exit_code == 2


class TestExportFeatures:
    def test_export_width_rows_and_values(self, csv_pair, tmp_path):
        train_path, _ = csv_pair
        model_path = str(tmp_path / "m.mddf")
        run([
            "train", "--data", train_path, "--label-col", "cls", *TINY,
            "--out-model", model_path, "--out-report", str(tmp_path / "r.json"),
        ])
        out_dir = str(tmp_path / "features")
        result = run([
            "export-features", "--model", model_path, "--data", train_path,
            "--label-col", "cls", "--out-dir", out_dir,
        ])
        assert result.exit_code == 0, result.output

        model = model_io.load(model_path)
        n, s = model.raw_dim, model.n_classes
        from mddf.dataset import parse_csv

        data = parse_csv(train_path, label_column="cls")
        for t in range(1, model.n_layers + 1):
            rows = open(f"{out_dir}/layer_{t:02d}.csv").read().splitlines()
            assert len(rows) - 1 == data.n_samples  # header + one line per sample
            assert len(rows[0].split(",")) == n + s
            # exported scores equal predict_scores of the model truncated at t
            truncated = CascadeModel(
                layers=model.layers[:t], n_classes=s, raw_dim=n,
                config=model.config, label_names=model.label_names,
            )
            expected = predict_scores_batch(truncated, data.features)
            got = np.array([
                [float(v) for v in line.split(",")[n:]] for line in rows[1:]
            ])
            np.testing.assert_allclose(got, expected, atol=1e-15)


class TestSelfCheck:
    def test_subcommand_passes(self):
        result = run(["self-check"])
        assert result.exit_code == 0, result.output
        assert result.output.count("PASS") == 3

    def test_top_level_flag(self):
        result = run(["--self-check"])
        assert result.exit_code == 0, result.output
