"""Three-block directed graph network with a two-layer classification head."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..skeleton import FeatureWindow, IncidencePair, IntentionClass
from .layers import ShapeError, dgn_block_backward, dgn_block_forward, relu

Params = dict[str, np.ndarray]

# argmax tie-break order: idle first, then pull, then push
_TIE_ORDER = (IntentionClass.IDLE.index, IntentionClass.PULL.index, IntentionClass.PUSH.index)


class NumericalError(FloatingPointError):
    pass


@dataclass(frozen=True)
class ModelConfig:
    channels: tuple[int, ...] = (32, 64, 64)
    in_channels: int = 3
    hidden: int = 64
    n_classes: int = 3
    kernel_size: int = 5
    dropout: float = 0.3

    def to_dict(self) -> dict:
        return {
            "channels": list(self.channels),
            "in_channels": self.in_channels,
            "hidden": self.hidden,
            "n_classes": self.n_classes,
            "kernel_size": self.kernel_size,
            "dropout": self.dropout,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "ModelConfig":
        return cls(**{**d, "channels": tuple(d["channels"])})


@dataclass
class ForwardCache:
    blocks: list
    pooled: np.ndarray
    mask: np.ndarray | None
    dropped: np.ndarray
    hidden_pre: np.ndarray
    hidden: np.ndarray
    counts: tuple[int, int, int]  # T, J, B


def param_names(config: ModelConfig) -> list[str]:
    names = []
    for i in range(len(config.channels)):
        for part in (
            "vertex_weight",
            "vertex_bias",
            "edge_weight",
            "edge_bias",
            "temporal_vertex",
            "temporal_vertex_bias",
            "temporal_edge",
            "temporal_edge_bias",
        ):
            names.append(f"block{i}.{part}")
    return names + ["fc1.weight", "fc1.bias", "fc2.weight", "fc2.bias"]


def _glorot(rng: np.random.Generator, shape: tuple[int, ...], fan_in: int, fan_out: int) -> np.ndarray:
    limit = np.sqrt(6.0 / (fan_in + fan_out))
    return rng.uniform(-limit, limit, size=shape)


def init_params(config: ModelConfig, rng: np.random.Generator | int = 0) -> Params:
    rng = np.random.default_rng(rng)
    p: Params = {}
    c_in = config.in_channels
    k = config.kernel_size
    if k % 2 == 0:
        raise ShapeError("kernel_size must be odd")
    for i, c_out in enumerate(config.channels):
        pre = f"block{i}."
        p[pre + "vertex_weight"] = _glorot(rng, (3 * c_in, c_out), 3 * c_in, c_out)
        p[pre + "vertex_bias"] = np.zeros(c_out)
        p[pre + "edge_weight"] = _glorot(rng, (c_in + 2 * c_out, c_out), c_in + 2 * c_out, c_out)
        p[pre + "edge_bias"] = np.zeros(c_out)
        p[pre + "temporal_vertex"] = _glorot(rng, (c_out, c_out, k), c_out * k, c_out * k)
        p[pre + "temporal_vertex_bias"] = np.zeros(c_out)
        p[pre + "temporal_edge"] = _glorot(rng, (c_out, c_out, k), c_out * k, c_out * k)
        p[pre + "temporal_edge_bias"] = np.zeros(c_out)
        c_in = c_out
    p["fc1.weight"] = _glorot(rng, (2 * c_in, config.hidden), 2 * c_in, config.hidden)
    p["fc1.bias"] = np.zeros(config.hidden)
    p["fc2.weight"] = _glorot(rng, (config.hidden, config.n_classes), config.hidden, config.n_classes)
    p["fc2.bias"] = np.zeros(config.n_classes)
    return p


def zeros_like_params(params: Params) -> Params:
    return {k: np.zeros_like(v) for k, v in params.items()}


def _block_params(params: Params, i: int) -> dict[str, np.ndarray]:
    pre = f"block{i}."
    return {k[len(pre):]: v for k, v in params.items() if k.startswith(pre)}


def n_blocks(params: Params) -> int:
    return sum(1 for k in params if k.endswith(".vertex_weight"))


def batch_windows(windows: list[FeatureWindow]) -> tuple[np.ndarray, np.ndarray]:
    """Stack windows into time-major (T, N, nodes, 3) arrays."""
    joints = np.stack([w.joints for w in windows], axis=1)
    bones = np.stack([w.bones for w in windows], axis=1)
    return joints, bones


def _check_finite(x: np.ndarray, where: str) -> None:
    if not np.all(np.isfinite(x)):
        raise NumericalError(f"non-finite activation in {where}")


def forward(
    joints: np.ndarray,
    bones: np.ndarray,
    params: Params,
    inc: IncidencePair,
    train: bool = False,
    rng: np.random.Generator | None = None,
    dropout: float = 0.3,
    mask: np.ndarray | None = None,
) -> tuple[np.ndarray, ForwardCache]:
    """Batched forward pass. ``joints``/``bones`` are (T, N, J|B, C)."""
    dtype = params["fc2.bias"].dtype
    a_src = inc.source.astype(dtype, copy=False)
    a_tgt = inc.target.astype(dtype, copy=False)
    v, e = joints.astype(dtype, copy=False), bones.astype(dtype, copy=False)
    caches = []
    for i in range(n_blocks(params)):
        v, e, c = dgn_block_forward(v, e, a_src, a_tgt, _block_params(params, i))
        _check_finite(v, f"block {i} (vertex stream)")
        _check_finite(e, f"block {i} (edge stream)")
        caches.append(c)
    T, N, J, _ = v.shape
    B = e.shape[2]
    pooled = np.concatenate([v.mean(axis=(0, 2)), e.mean(axis=(0, 2))], axis=-1)
    if train and mask is None and dropout > 0:
        if rng is None:
            raise ValueError("train mode needs an rng for dropout")
        keep = 1.0 - dropout
        mask = (rng.random(pooled.shape) < keep).astype(dtype) / keep
    if not train:
        mask = None
    dropped = pooled * mask if mask is not None else pooled
    hidden_pre = dropped @ params["fc1.weight"] + params["fc1.bias"]
    _check_finite(hidden_pre, "fc1")
    hidden = relu(hidden_pre)
    logits = hidden @ params["fc2.weight"] + params["fc2.bias"]
    _check_finite(logits, "fc2")
    return logits, ForwardCache(caches, pooled, mask, dropped, hidden_pre, hidden, (T, J, B))


def backward(dlogits: np.ndarray, params: Params, inc: IncidencePair, cache: ForwardCache) -> Params:
    dtype = params["fc2.bias"].dtype
    a_src = inc.source.astype(dtype, copy=False)
    a_tgt = inc.target.astype(dtype, copy=False)
    g: Params = {}
    g["fc2.weight"] = cache.hidden.T @ dlogits
    g["fc2.bias"] = dlogits.sum(axis=0)
    dhidden = (dlogits @ params["fc2.weight"].T) * (cache.hidden_pre > 0)
    g["fc1.weight"] = cache.dropped.T @ dhidden
    g["fc1.bias"] = dhidden.sum(axis=0)
    dpooled = dhidden @ params["fc1.weight"].T
    if cache.mask is not None:
        dpooled = dpooled * cache.mask
    T, J, B = cache.counts
    c = dpooled.shape[1] // 2
    N = dpooled.shape[0]
    dv = np.broadcast_to((dpooled[:, :c] / (T * J))[None, :, None, :], (T, N, J, c))
    de = np.broadcast_to((dpooled[:, c:] / (T * B))[None, :, None, :], (T, N, B, c))
    for i in reversed(range(len(cache.blocks))):
        dv, de, bg = dgn_block_backward(
            dv, de, a_src, a_tgt, _block_params(params, i), cache.blocks[i], need_input_grad=i > 0
        )
        for k, val in bg.items():
            g[f"block{i}.{k}"] = val
    return {k: g[k] for k in params}


def model_forward(
    window: FeatureWindow,
    params: Params,
    inc: IncidencePair,
    mode: str = "eval",
    rng: np.random.Generator | None = None,
    dropout: float = 0.3,
) -> tuple[np.ndarray, ForwardCache]:
    """Logits (pull, idle, push) for a single window."""
    if mode not in ("train", "eval"):
        raise ValueError(f"mode must be 'train' or 'eval', got {mode!r}")
    joints, bones = batch_windows([window])
    logits, cache = forward(joints, bones, params, inc, train=mode == "train", rng=rng, dropout=dropout)
    return logits[0], cache


def predict_logits(
    joints: np.ndarray,
    bones: np.ndarray,
    params: Params,
    inc: IncidencePair,
    batch_size: int = 256,
) -> np.ndarray:
    """Eval-mode logits for time-major stacks (T, N, ...) in fixed-size chunks."""
    out = []
    for s in range(0, joints.shape[1], batch_size):
        logits, _ = forward(joints[:, s : s + batch_size], bones[:, s : s + batch_size], params, inc)
        out.append(logits)
    if not out:
        return np.zeros((0, params["fc2.bias"].shape[0]))
    return np.concatenate(out, axis=0)


def select_class(logits: np.ndarray) -> IntentionClass:
    logits = np.asarray(logits, dtype=float)
    best = max(_TIE_ORDER, key=lambda i: (logits[i], -_TIE_ORDER.index(i)))
    return IntentionClass.from_index(best)


def select_classes(logits: np.ndarray) -> np.ndarray:
    """Vectorised select_class over rows; returns intention values (-1, 0, 1)."""
    order = np.array(_TIE_ORDER)
    # np.argmax keeps the first maximum, so permute columns into tie-break order
    idx = order[np.argmax(logits[:, order], axis=1)]
    return idx - 1


def softmax_cross_entropy(logits: np.ndarray, labels: np.ndarray) -> tuple[float, np.ndarray]:
    """Mean cross-entropy and its gradient. ``labels`` are class indices."""
    shifted = logits - logits.max(axis=1, keepdims=True)
    exp = np.exp(shifted)
    z = exp.sum(axis=1, keepdims=True)
    if not np.all(np.isfinite(z)):
        raise NumericalError("softmax overflow; parameters are corrupt")
    log_probs = shifted - np.log(z)
    n = logits.shape[0]
    loss = -float(log_probs[np.arange(n), labels].mean())
    grad = exp / z
    grad[np.arange(n), labels] -= 1.0
    return loss, grad / n


def loss_and_grad(
    joints: np.ndarray,
    bones: np.ndarray,
    labels: np.ndarray,
    params: Params,
    inc: IncidencePair,
    rng: np.random.Generator | None = None,
    dropout: float = 0.3,
    mask: np.ndarray | None = None,
) -> tuple[float, Params, np.ndarray]:
    """Loss, gradients and logits for a batch; labels are class indices 0..2."""
    if joints.shape[1] == 0:
        raise ValueError("empty batch")
    logits, cache = forward(joints, bones, params, inc, train=True, rng=rng, dropout=dropout, mask=mask)
    loss, dlogits = softmax_cross_entropy(logits, labels)
    return loss, backward(dlogits, params, inc, cache), logits


@dataclass
class SGDState:
    velocity: Params = field(default_factory=dict)


def sgd_step(
    params: Params,
    grads: Params,
    learning_rate: float,
    momentum: float,
    weight_decay: float,
    state: SGDState | None = None,
) -> Params:
    """Momentum SGD with weight decay folded into the gradient; updates in place."""
    if state is None:
        state = SGDState()
    for k, p in params.items():
        if grads[k].shape != p.shape:
            raise ShapeError(f"gradient for {k} has shape {grads[k].shape}, parameter {p.shape}")
        vel = state.velocity.get(k)
        if vel is None:
            vel = state.velocity[k] = np.zeros_like(p)
        vel *= momentum
        vel -= learning_rate * (grads[k] + weight_decay * p)
        p += vel
    return params
