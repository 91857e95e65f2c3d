"""Sliding-window sample construction and the SGD training loop."""

from __future__ import annotations

import logging
import time
from dataclasses import asdict, dataclass
from pathlib import Path

import numpy as np

from ..metrics import classification_metrics
from ..recordings import Recording, load_manifest, load_split, manifest_hash
from ..skeleton import WINDOW_LENGTH, build_topology, incidence_matrices, joints_to_features
from .checkpoint import Checkpoint
from .normalize import InputStats, fit_input_stats
from .model import ModelConfig, SGDState, init_params, loss_and_grad, predict_logits, select_classes, sgd_step

log = logging.getLogger(__name__)


class TrainingError(RuntimeError):
    pass


@dataclass(frozen=True)
class TrainConfig:
    learning_rate: float = 0.02
    weight_decay: float = 0.005
    momentum: float = 0.9
    batch_size: int = 32
    epochs: int = 30
    seed: int = 0
    prediction_offset: int = 25
    window_length: int = WINDOW_LENGTH
    window_stride: int = 5
    eval_stride: int = 5
    dtype: str = "float32"
    patience: int | None = None  # stop after this many epochs without improvement
    target_balanced_accuracy: float | None = None  # stop once validation reaches this

    def __post_init__(self):
        if not (self.learning_rate > 0 and self.weight_decay >= 0 and 0 <= self.momentum < 1):
            raise TrainingError("learning rate must be positive, decay non-negative, momentum in [0, 1)")
        if self.prediction_offset < 0:
            raise TrainingError("prediction offset must be >= 0")
        if self.batch_size < 1 or self.epochs < 1 or self.window_stride < 1 or self.eval_stride < 1:
            raise TrainingError("batch size, epochs and strides must be >= 1")

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, d: dict) -> "TrainConfig":
        unknown = set(d) - set(cls.__dataclass_fields__)
        if unknown:
            raise TrainingError(f"unknown training config keys: {sorted(unknown)}")
        return cls(**d)


class WindowSet:
    """Windows ending at frame t of a recording, labelled with the label at t + offset."""

    def __init__(
        self,
        recordings: list[Recording],
        window: int,
        offset: int,
        stride: int,
        stats: InputStats | None = None,
    ):
        graph = build_topology()
        self.window = window
        self.joints = []
        self.bones = []
        index = []
        labels = []
        for r, rec in enumerate(recordings):
            rel, bones = joints_to_features(rec.joints, graph)
            if stats is not None:
                rel, bones = stats.apply(rel, bones)
            self.joints.append(rel)
            self.bones.append(bones)
            ends = np.arange(window - 1, len(rec) - offset, stride)
            index.extend((r, int(t)) for t in ends)
            labels.append(rec.labels[ends + offset])
        self.index = np.array(index, dtype=int).reshape(-1, 2)
        self.labels = np.concatenate(labels).astype(int) if labels else np.zeros(0, dtype=int)

    def __len__(self) -> int:
        return len(self.index)

    def batch(self, rows: np.ndarray, dtype=np.float64) -> tuple[np.ndarray, np.ndarray]:
        """Time-major (T, N, nodes, 3) arrays for the given sample rows."""
        T = self.window
        j = np.empty((T, len(rows)) + self.joints[0].shape[1:], dtype=dtype)
        b = np.empty((T, len(rows)) + self.bones[0].shape[1:], dtype=dtype)
        for n, (r, t) in enumerate(self.index[rows]):
            j[:, n] = self.joints[r][t - T + 1 : t + 1]
            b[:, n] = self.bones[r][t - T + 1 : t + 1]
        return j, b


def evaluate(params, windows: WindowSet, inc, batch_size: int = 256, dtype=np.float64):
    preds = []
    for s in range(0, len(windows), batch_size):
        rows = np.arange(s, min(s + batch_size, len(windows)))
        j, b = windows.batch(rows, dtype)
        preds.append(select_classes(predict_logits(j, b, params, inc, batch_size)))
    pred = np.concatenate(preds) if preds else np.zeros(0, dtype=int)
    return classification_metrics(pred, windows.labels)


def best_epoch(history: list[dict], key: str = "val_balanced_accuracy") -> int:
    """Index of the best epoch; later epochs win ties."""
    best = 0
    for i, h in enumerate(history):
        if h[key] >= history[best][key]:
            best = i
    return best


def train_on(
    train_recs: list[Recording],
    val_recs: list[Recording],
    config: TrainConfig,
    model_config: ModelConfig = ModelConfig(),
    manifest_digest: str = "",
    on_epoch=None,
) -> Checkpoint:
    if not train_recs or not val_recs:
        raise TrainingError("training and validation splits must both be non-empty")
    dtype = np.dtype(config.dtype)
    graph = build_topology()
    inc = incidence_matrices(graph)
    stats = fit_input_stats(*zip(*(joints_to_features(r.joints, graph) for r in train_recs)))
    train_set = WindowSet(train_recs, config.window_length, config.prediction_offset, config.window_stride, stats)
    val_set = WindowSet(val_recs, config.window_length, config.prediction_offset, config.eval_stride, stats)
    if len(train_set) == 0 or len(val_set) == 0:
        raise TrainingError("recordings too short to form any window")

    warnings = []
    present = set(np.unique(train_set.labels).tolist())
    for cls, name in ((-1, "PULL"), (0, "IDLE"), (1, "PUSH")):
        if cls not in present:
            msg = f"class {name} absent from training data"
            warnings.append(msg)
            log.warning(msg)

    rng = np.random.default_rng(config.seed)
    params = {k: v.astype(dtype) for k, v in init_params(model_config, rng).items()}
    opt = SGDState()
    history: list[dict] = []
    best_params = None
    stale = 0
    for epoch in range(config.epochs):
        t0 = time.perf_counter()
        order = np.random.default_rng([config.seed, epoch]).permutation(len(train_set))
        drop_rng = np.random.default_rng([config.seed, epoch, 1])
        losses, correct = [], 0
        for s in range(0, len(order), config.batch_size):
            rows = order[s : s + config.batch_size]
            j, b = train_set.batch(rows, dtype)
            y = train_set.labels[rows] + 1
            loss, grads, logits = loss_and_grad(j, b, y, params, inc, rng=drop_rng, dropout=model_config.dropout)
            sgd_step(params, grads, config.learning_rate, config.momentum, config.weight_decay, opt)
            losses.append(loss * len(rows))
            correct += int(np.sum(np.argmax(logits, axis=1) == y))
        report = evaluate(params, val_set, inc, dtype=dtype)
        entry = {
            "epoch": epoch + 1,
            "train_loss": float(np.sum(losses) / len(order)),
            "train_accuracy": correct / len(order),
            "val_accuracy": report.accuracy,
            "val_balanced_accuracy": report.balanced_accuracy,
            "val_confusion": report.confusion.tolist(),
        }
        history.append(entry)
        log.info(
            "epoch %d loss %.4f train acc %.3f val acc %.3f val bal acc %.3f (%.0f s)",
            entry["epoch"], entry["train_loss"], entry["train_accuracy"],
            entry["val_accuracy"], entry["val_balanced_accuracy"], time.perf_counter() - t0,
        )
        if on_epoch is not None:
            on_epoch(entry)
        if best_epoch(history) == epoch:
            best_params = {k: v.astype(np.float64) for k, v in params.items()}
            stale = 0
        else:
            stale += 1
            if config.patience is not None and stale >= config.patience:
                break
        target = config.target_balanced_accuracy
        if target is not None and entry["val_balanced_accuracy"] >= target:
            break

    best = best_epoch(history)
    return Checkpoint(
        params=best_params,
        model_config=model_config,
        input_stats=stats,
        train_config=config,
        history=history,
        best_epoch=best + 1,
        manifest_hash=manifest_digest,
        warnings=warnings,
    )


def train(manifest_path, config: TrainConfig = TrainConfig(), model_config: ModelConfig = ModelConfig(), on_epoch=None) -> Checkpoint:
    manifest = load_manifest(manifest_path)
    train_recs = load_split(manifest, "train")
    val_recs = load_split(manifest, "val")
    return train_on(train_recs, val_recs, config, model_config, manifest_hash(Path(manifest_path)), on_epoch)
