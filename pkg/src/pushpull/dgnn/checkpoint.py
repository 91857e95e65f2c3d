"""Self-describing JSON checkpoint container with bit-exact float64 arrays."""

from __future__ import annotations

import base64
import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .model import ModelConfig, Params
from .normalize import InputStats

FORMAT_VERSION = "v1"


class CheckpointError(ValueError):
    pass


class CheckpointVersionError(CheckpointError):
    pass


@dataclass
class Checkpoint:
    params: Params
    model_config: ModelConfig
    input_stats: InputStats | None = None
    train_config: object = None  # TrainConfig; kept loose to avoid an import cycle
    history: list[dict] = field(default_factory=list)
    best_epoch: int = 0
    manifest_hash: str = ""
    warnings: list[str] = field(default_factory=list)
    version: str = FORMAT_VERSION


def _encode(a: np.ndarray) -> dict:
    a = np.ascontiguousarray(a, dtype="<f8")
    return {"shape": list(a.shape), "dtype": "float64", "data": base64.b64encode(a.tobytes()).decode("ascii")}


def _decode(d: dict) -> np.ndarray:
    raw = base64.b64decode(d["data"], validate=True)
    a = np.frombuffer(raw, dtype="<f8").astype(np.float64)
    return a.reshape(d["shape"])


def to_json(cp: Checkpoint) -> str:
    doc = {
        "version": cp.version,
        "model_config": cp.model_config.to_dict(),
        "train_config": cp.train_config.to_dict() if cp.train_config is not None else None,
        "params": {k: _encode(v) for k, v in cp.params.items()},
        "input_stats": None
        if cp.input_stats is None
        else {k: _encode(v) for k, v in cp.input_stats.to_arrays().items()},
        "history": cp.history,
        "best_epoch": cp.best_epoch,
        "manifest_hash": cp.manifest_hash,
        "warnings": cp.warnings,
    }
    return json.dumps(doc, sort_keys=True, indent=1) + "\n"


def save_checkpoint(cp: Checkpoint, path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(to_json(cp))
    return path


def from_json(text: str) -> Checkpoint:
    from .train import TrainConfig, TrainingError

    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise CheckpointError(f"corrupt checkpoint: {exc}") from exc
    if not isinstance(doc, dict) or "version" not in doc:
        raise CheckpointError("corrupt checkpoint: no version tag")
    if doc["version"] != FORMAT_VERSION:
        raise CheckpointVersionError(f"checkpoint version {doc['version']!r}, this code reads {FORMAT_VERSION!r}")
    try:
        params = {k: _decode(v) for k, v in doc["params"].items()}
        model_config = ModelConfig.from_dict(doc["model_config"])
        tc = doc["train_config"]
        st = doc["input_stats"]
        return Checkpoint(
            params=params,
            model_config=model_config,
            input_stats=None if st is None else InputStats.from_arrays({k: _decode(v) for k, v in st.items()}),
            train_config=TrainConfig.from_dict(tc) if tc is not None else None,
            history=doc["history"],
            best_epoch=doc["best_epoch"],
            manifest_hash=doc["manifest_hash"],
            warnings=doc["warnings"],
        )
    except (KeyError, TypeError, ValueError, TrainingError) as exc:
        raise CheckpointError(f"corrupt checkpoint: {exc}") from exc


def load_checkpoint(path) -> Checkpoint:
    try:
        text = Path(path).read_text()
    except UnicodeDecodeError as exc:
        raise CheckpointError(f"corrupt checkpoint: {exc}") from exc
    return from_json(text)


def zero_checkpoint(model_config: ModelConfig = ModelConfig()) -> Checkpoint:
    """All-zero weights; every window then maps to IDLE via the tie-break."""
    from .model import init_params

    params = {k: np.zeros_like(v) for k, v in init_params(model_config, 0).items()}
    return Checkpoint(params=params, model_config=model_config)
