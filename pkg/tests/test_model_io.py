import numpy as np
import pytest

from conftest import blob_dataset
from mddf import model_io
from mddf.cascade import (
    BaselineForest,
    CascadeConfig,
    predict_scores_batch,
    train,
    train_baseline_forest,
)
from mddf.errors import ModelFormatError
from mddf.forest import predict_forest_batch
from mddf.margin import MdLossParams


@pytest.fixture(scope="module")
def fitted_model():
    import warnings

    ds = blob_dataset(m=26, n=3, s=3, seed=21, spread=1.0)
    cfg = CascadeConfig(max_layers=2, k_folds=2, n_trees=3, seed=4,
                        loss=MdLossParams(gamma=0.85, mu=0.05),
                        early_stop_patience=0)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", UserWarning)
        return train(ds, cfg)


class TestRoundTrip:
    def test_scores_bit_identical_on_random_inputs(self, fitted_model, tmp_path, rng):
        path = str(tmp_path / "model.mddf")
        model_io.save(fitted_model, path)
        restored = model_io.load(path)
        probe = rng.normal(size=(100, fitted_model.raw_dim))
        original = predict_scores_batch(fitted_model, probe)
        loaded = predict_scores_batch(restored, probe)
        assert original.tobytes() == loaded.tobytes()  # bit-for-bit

    def test_metadata_preserved(self, fitted_model, tmp_path):
        path = str(tmp_path / "model.mddf")
        model_io.save(fitted_model, path)
        restored = model_io.load(path)
        assert restored.n_classes == fitted_model.n_classes
        assert restored.raw_dim == fitted_model.raw_dim
        assert restored.label_names == fitted_model.label_names
        assert [l.alpha for l in restored.layers] == [l.alpha for l in fitted_model.layers]
        assert restored.config == fitted_model.config
        assert restored.training_report == fitted_model.training_report

    def test_baseline_round_trip(self, tmp_path, rng):
        ds = blob_dataset(m=20, n=2, s=2, seed=22)
        baseline = train_baseline_forest(ds, n_trees=5, seed=1)
        path = str(tmp_path / "baseline.mddf")
        model_io.save(baseline, path)
        restored = model_io.load(path)
        assert isinstance(restored, BaselineForest)
        probe = rng.normal(size=(20, 2))
        np.testing.assert_array_equal(
            predict_forest_batch(baseline.forest, probe),
            predict_forest_batch(restored.forest, probe),
        )


class TestDamage:
    def test_corrupted_byte_fails_checksum(self, fitted_model, tmp_path):
        path = tmp_path / "model.mddf"
        model_io.save(fitted_model, str(path))
        blob = bytearray(path.read_bytes())
        blob[len(blob) // 2] ^= 0xFF
        path.write_bytes(bytes(blob))
        with pytest.raises(ModelFormatError, match="checksum"):
            model_io.load(str(path))

    def test_unknown_version_rejected(self, fitted_model, tmp_path):
        path = tmp_path / "model.mddf"
        model_io.save(fitted_model, str(path))
        blob = bytearray(path.read_bytes())
        blob[4:6] = (99).to_bytes(2, "little")
        path.write_bytes(bytes(blob))
        with pytest.raises(ModelFormatError, match="version"):
            model_io.load(str(path))

    def test_truncated_file_rejected(self, fitted_model, tmp_path):
        path = tmp_path / "model.mddf"
        model_io.save(fitted_model, str(path))
        blob = path.read_bytes()
        path.write_bytes(blob[: len(blob) // 2])
        with pytest.raises(ModelFormatError):
            model_io.load(str(path))

    def test_not_a_model_file(self, tmp_path):
        path = tmp_path / "junk.bin"
        path.write_bytes(b"definitely not a model")
        with pytest.raises(ModelFormatError, match="magic|truncated"):
            model_io.load(str(path))
