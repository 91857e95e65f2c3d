"""Finite-difference verification of the analytic gradients on a micro model."""

from __future__ import annotations

import numpy as np

from ..skeleton import DirectedSkeletonGraph, incidence_matrices
from .model import ModelConfig, init_params, loss_and_grad

MICRO_GRAPH = DirectedSkeletonGraph(("root", "a", "b"), ((0, 1), (0, 2)), 0)
MICRO_CONFIG = ModelConfig(channels=(2, 2, 2), in_channels=3, hidden=2, kernel_size=3, dropout=0.3)


def micro_problem(seed: int, batch: int = 3, frames: int = 4):
    rng = np.random.default_rng(seed)
    params = init_params(MICRO_CONFIG, rng)
    # random biases so that no unit starts exactly at the ReLU kink
    for k in params:
        if k.endswith("bias"):
            params[k] = rng.normal(0.0, 0.1, size=params[k].shape)
    inc = incidence_matrices(MICRO_GRAPH)
    joints = rng.normal(size=(frames, batch, 3, 3))
    bones = joints[:, :, MICRO_GRAPH.targets] - joints[:, :, MICRO_GRAPH.sources]
    labels = rng.integers(0, 3, size=batch)
    keep = 1.0 - MICRO_CONFIG.dropout
    mask = (rng.random((batch, 2 * MICRO_CONFIG.channels[-1])) < keep) / keep
    return params, inc, joints, bones, labels, mask


def grad_check(
    params_seed: int = 0,
    epsilon: float = 1e-5,
    corrupt: dict[str, float] | None = None,
) -> float:
    """Max relative error between analytic and central-difference gradients.

    ``corrupt`` scales named analytic gradients, for negative controls.
    """
    if not epsilon > 0:
        raise ValueError(f"epsilon must be positive, got {epsilon}")
    params, inc, joints, bones, labels, mask = micro_problem(params_seed)

    def loss_at() -> float:
        return loss_and_grad(joints, bones, labels, params, inc, mask=mask)[0]

    _, analytic, _ = loss_and_grad(joints, bones, labels, params, inc, mask=mask)
    for name, factor in (corrupt or {}).items():
        analytic[name] = analytic[name] * factor

    worst = 0.0
    for name, p in params.items():
        flat = p.reshape(-1)
        a_flat = analytic[name].reshape(-1)
        for i in range(flat.size):
            orig = flat[i]
            flat[i] = orig + epsilon
            up = loss_at()
            flat[i] = orig - epsilon
            down = loss_at()
            flat[i] = orig
            num = (up - down) / (2 * epsilon)
            a = a_flat[i]
            err = abs(a - num) / max(abs(a), abs(num), 1e-8)
            worst = max(worst, err)
    return worst
