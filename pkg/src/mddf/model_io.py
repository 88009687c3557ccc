"""Versioned single-file model container.

Layout: 4-byte magic, uint16 format version, 32-byte SHA-256 of the body,
then the body itself (uint64 header length, JSON header, raw array payload).
The header describes every array (dtype, shape, offset), the configuration,
and the training report, so the file can be decoded without the writing
code. Any corrupted body byte fails the checksum before anything is parsed.
"""

from __future__ import annotations

import dataclasses
import hashlib
import json
import struct

import numpy as np

from .block import BlockConfig, pack_block, unpack_block
from .cascade import BaselineForest, CascadeConfig, CascadeLayer, CascadeModel
from .errors import ModelFormatError
from .forest import ForestConfig, pack_forest, unpack_forest
from .margin import MdLossParams
from .tree import TreeConfig

MAGIC = b"MDDF"
FORMAT_VERSION = 1


def _config_to_dict(config) -> dict:
    return dataclasses.asdict(config)


def _cascade_config_from_dict(d: dict) -> CascadeConfig:
    d = dict(d)
    d["loss"] = MdLossParams(**d["loss"])
    return CascadeConfig(**d)


def _block_config_from_dict(d: dict) -> BlockConfig:
    d = dict(d)
    d["forests"] = [_forest_config_from_dict(fc) for fc in d["forests"]]
    return BlockConfig(**d)


def _forest_config_from_dict(d: dict) -> ForestConfig:
    d = dict(d)
    d["tree"] = TreeConfig(**d["tree"])
    return ForestConfig(**d)


def _write_container(path, header: dict, arrays: dict[str, np.ndarray]) -> None:
    manifest = {}
    payload_parts = []
    offset = 0
    for name in sorted(arrays):
        arr = np.ascontiguousarray(arrays[name])
        raw = arr.tobytes()
        manifest[name] = {
            "dtype": str(arr.dtype),
            "shape": list(arr.shape),
            "offset": offset,
            "nbytes": len(raw),
        }
        payload_parts.append(raw)
        offset += len(raw)
    header = dict(header)
    header["arrays"] = manifest
    header_bytes = json.dumps(header, sort_keys=True).encode("utf-8")
    body = struct.pack("<Q", len(header_bytes)) + header_bytes + b"".join(payload_parts)
    digest = hashlib.sha256(body).digest()
    with open(path, "wb") as fh:
        fh.write(MAGIC)
        fh.write(struct.pack("<H", FORMAT_VERSION))
        fh.write(digest)
        fh.write(body)


def _read_container(path) -> tuple[dict, dict[str, np.ndarray]]:
    with open(path, "rb") as fh:
        blob = fh.read()
    if len(blob) < 4 + 2 + 32 + 8 or blob[:4] != MAGIC:
        raise ModelFormatError(f"{path}: not a model file (bad magic or truncated)")
    (version,) = struct.unpack("<H", blob[4:6])
    if version != FORMAT_VERSION:
        raise ModelFormatError(
            f"{path}: unsupported format version {version} (expected {FORMAT_VERSION})"
        )
    digest, body = blob[6:38], blob[38:]
    if hashlib.sha256(body).digest() != digest:
        raise ModelFormatError(f"{path}: checksum mismatch, file is corrupt")
    (header_len,) = struct.unpack("<Q", body[:8])
    if 8 + header_len > len(body):
        raise ModelFormatError(f"{path}: truncated header")
    header = json.loads(body[8:8 + header_len].decode("utf-8"))
    payload = body[8 + header_len:]
    arrays: dict[str, np.ndarray] = {}
    for name, info in header["arrays"].items():
        a, nbytes = info["offset"], info["nbytes"]
        if a + nbytes > len(payload):
            raise ModelFormatError(f"{path}: truncated array payload for {name!r}")
        arrays[name] = np.frombuffer(
            payload[a:a + nbytes], dtype=np.dtype(info["dtype"])
        ).reshape(info["shape"]).copy()
    return header, arrays


def save(model: CascadeModel | BaselineForest, path) -> None:
    """Write a fitted model to `path` in the versioned container format."""
    if isinstance(model, CascadeModel):
        arrays: dict[str, np.ndarray] = {}
        block_meta = []
        block_configs = []
        for t, layer in enumerate(model.layers):
            meta, block_arrays = pack_block(layer.block)
            block_meta.append(meta)
            block_configs.append(_config_to_dict(layer.block.config))
            for key, arr in block_arrays.items():
                arrays[f"L{t}.{key}"] = arr
        header = {
            "kind": "mddf_cascade",
            "config": _config_to_dict(model.config),
            "alphas": [layer.alpha for layer in model.layers],
            "block_meta": block_meta,
            "block_configs": block_configs,
            "n_classes": model.n_classes,
            "raw_dim": model.raw_dim,
            "label_names": model.label_names,
            "feature_names": model.feature_names,
            "training_report": model.training_report,
        }
    elif isinstance(model, BaselineForest):
        arrays = {f"forest.{k}": v for k, v in pack_forest(model.forest).items()}
        header = {
            "kind": "baseline_forest",
            "config": _config_to_dict(model.forest.config),
            "n_classes": model.n_classes,
            "raw_dim": model.raw_dim,
            "label_names": model.label_names,
            "feature_names": model.feature_names,
            "training_report": model.training_report,
        }
    else:
        raise TypeError(f"cannot save object of type {type(model).__name__}")
    _write_container(path, header, arrays)


def load(path) -> CascadeModel | BaselineForest:
    """Read a model saved by `save`; raises ModelFormatError on any damage."""
    header, arrays = _read_container(path)
    kind = header.get("kind")
    if kind == "mddf_cascade":
        config = _cascade_config_from_dict(header["config"])
        layers = []
        for t, alpha in enumerate(header["alphas"]):
            prefix = f"L{t}."
            block_arrays = {k[len(prefix):]: v for k, v in arrays.items() if k.startswith(prefix)}
            block = unpack_block(
                header["block_meta"][t],
                block_arrays,
                _block_config_from_dict(header["block_configs"][t]),
            )
            layers.append(CascadeLayer(block=block, alpha=float(alpha)))
        return CascadeModel(
            layers=layers,
            n_classes=header["n_classes"],
            raw_dim=header["raw_dim"],
            config=config,
            training_report=header["training_report"],
            label_names=header["label_names"],
            feature_names=header["feature_names"],
        )
    if kind == "baseline_forest":
        config = _forest_config_from_dict(header["config"])
        sub = {k[len("forest."):]: v for k, v in arrays.items() if k.startswith("forest.")}
        return BaselineForest(
            forest=unpack_forest(sub, config, header["n_classes"]),
            n_classes=header["n_classes"],
            raw_dim=header["raw_dim"],
            label_names=header["label_names"],
            feature_names=header["feature_names"],
            training_report=header["training_report"],
        )
    raise ModelFormatError(f"{path}: unknown model kind {kind!r}")
