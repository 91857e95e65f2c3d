"""Directed-graph block and temporal convolution with hand-written gradients.

All activations use a time-major layout ``(T, N, nodes, C)``: time first so
that every temporal shift of a zero-padded stream is a contiguous slice.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


class ShapeError(ValueError):
    pass


def relu(x: np.ndarray) -> np.ndarray:
    return np.maximum(x, 0.0)


def _dense(x: np.ndarray, w: np.ndarray, b: np.ndarray) -> np.ndarray:
    lead = x.shape[:-1]
    return (x.reshape(-1, x.shape[-1]) @ w + b).reshape(*lead, w.shape[1])


def _dense_grads(x: np.ndarray, w: np.ndarray, dz: np.ndarray, need_dx: bool = True):
    x2 = x.reshape(-1, x.shape[-1])
    dz2 = dz.reshape(-1, dz.shape[-1])
    dw = x2.T @ dz2
    db = dz2.sum(axis=0)
    dx = (dz2 @ w.T).reshape(x.shape) if need_dx else None
    return dx, dw, db


def temporal_conv(x: np.ndarray, kernel: np.ndarray, bias: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Stride-1 convolution along axis 0 with symmetric zero padding.

    ``kernel`` has shape (C_out, C_in, K); returns (output, padded input).
    """
    c_out, c_in, k = kernel.shape
    if k % 2 == 0:
        raise ShapeError(f"temporal kernel size must be odd, got {k}")
    if x.shape[-1] != c_in:
        raise ShapeError(f"temporal conv expects {c_in} channels, got {x.shape[-1]}")
    T = x.shape[0]
    pad = (k - 1) // 2
    xp = np.zeros((T + 2 * pad,) + x.shape[1:], dtype=x.dtype)
    xp[pad : pad + T] = x
    rows = int(np.prod(x.shape[:-1]))
    out = np.broadcast_to(bias, (rows, c_out)).copy()
    for j in range(k):
        w = np.ascontiguousarray(kernel[:, :, j].T)
        out += xp[j : j + T].reshape(rows, c_in) @ w
    return out.reshape(*x.shape[:-1], c_out), xp


def temporal_conv_backward(dout: np.ndarray, xp: np.ndarray, kernel: np.ndarray, need_dx: bool = True):
    c_out, c_in, k = kernel.shape
    T = dout.shape[0]
    pad = (k - 1) // 2
    rows = int(np.prod(dout.shape[:-1]))
    g = dout.reshape(rows, c_out)
    dkernel = np.empty_like(kernel)
    dxp = np.zeros_like(xp) if need_dx else None
    for j in range(k):
        xs = xp[j : j + T].reshape(rows, c_in)
        dkernel[:, :, j] = g.T @ xs
        if need_dx:
            w = np.ascontiguousarray(kernel[:, :, j])
            dxp[j : j + T] += (g @ w).reshape(dout.shape[:-1] + (c_in,))
    dbias = g.sum(axis=0)
    dx = dxp[pad : pad + T] if need_dx else None
    return dx, dkernel, dbias


@dataclass
class BlockCache:
    vertex_in: np.ndarray
    edge_in: np.ndarray
    vertex_cat: np.ndarray
    vertex_hidden: np.ndarray
    edge_cat: np.ndarray
    edge_hidden: np.ndarray
    vertex_padded: np.ndarray
    edge_padded: np.ndarray
    vertex_out: np.ndarray
    edge_out: np.ndarray


def dgn_block_forward(
    vertex: np.ndarray,
    edge: np.ndarray,
    a_source: np.ndarray,
    a_target: np.ndarray,
    p: dict[str, np.ndarray],
) -> tuple[np.ndarray, np.ndarray, BlockCache]:
    """One graph-temporal block.

    ``vertex`` is (T, N, J, C_in) and ``edge`` is (T, N, B, C_in). ``p`` holds
    ``vertex_weight`` (3C_in, C_out), ``edge_weight`` (C_in + 2C_out, C_out),
    the two temporal kernels (C_out, C_out, K) and their biases.
    """
    J, B = a_source.shape
    c_in = vertex.shape[-1]
    if vertex.shape[-2] != J or edge.shape[-2] != B:
        raise ShapeError(
            f"graph has {J} joints / {B} bones, features have {vertex.shape[-2]} / {edge.shape[-2]}"
        )
    if edge.shape[-1] != c_in or vertex.shape[:2] != edge.shape[:2]:
        raise ShapeError(f"vertex {vertex.shape} and edge {edge.shape} features disagree")
    if p["vertex_weight"].shape[0] != 3 * c_in:
        raise ShapeError(f"vertex_weight expects {p['vertex_weight'].shape[0] // 3} input channels, got {c_in}")

    vertex_cat = np.concatenate([vertex, a_source @ edge, a_target @ edge], axis=-1)
    vertex_hidden = relu(_dense(vertex_cat, p["vertex_weight"], p["vertex_bias"]))
    edge_cat = np.concatenate(
        [edge, a_source.T @ vertex_hidden, a_target.T @ vertex_hidden], axis=-1
    )
    edge_hidden = relu(_dense(edge_cat, p["edge_weight"], p["edge_bias"]))

    zv, vp = temporal_conv(vertex_hidden, p["temporal_vertex"], p["temporal_vertex_bias"])
    ze, ep = temporal_conv(edge_hidden, p["temporal_edge"], p["temporal_edge_bias"])
    v_out = relu(zv)
    e_out = relu(ze)
    cache = BlockCache(vertex, edge, vertex_cat, vertex_hidden, edge_cat, edge_hidden, vp, ep, v_out, e_out)
    return v_out, e_out, cache


def dgn_block_backward(
    dv_out: np.ndarray,
    de_out: np.ndarray,
    a_source: np.ndarray,
    a_target: np.ndarray,
    p: dict[str, np.ndarray],
    cache: BlockCache,
    need_input_grad: bool = True,
):
    grads: dict[str, np.ndarray] = {}
    c_in = cache.vertex_in.shape[-1]
    c_out = p["vertex_weight"].shape[1]

    dzv_t = dv_out * (cache.vertex_out > 0)
    dze_t = de_out * (cache.edge_out > 0)
    dv_hidden, grads["temporal_vertex"], grads["temporal_vertex_bias"] = temporal_conv_backward(
        dzv_t, cache.vertex_padded, p["temporal_vertex"]
    )
    de_hidden, grads["temporal_edge"], grads["temporal_edge_bias"] = temporal_conv_backward(
        dze_t, cache.edge_padded, p["temporal_edge"]
    )

    dze = de_hidden * (cache.edge_hidden > 0)
    d_edge_cat, grads["edge_weight"], grads["edge_bias"] = _dense_grads(cache.edge_cat, p["edge_weight"], dze)
    de_in = d_edge_cat[..., :c_in]
    dv_hidden = (
        dv_hidden
        + a_source @ d_edge_cat[..., c_in : c_in + c_out]
        + a_target @ d_edge_cat[..., c_in + c_out :]
    )

    dzv_lin = dv_hidden * (cache.vertex_hidden > 0)
    d_vertex_cat, grads["vertex_weight"], grads["vertex_bias"] = _dense_grads(
        cache.vertex_cat, p["vertex_weight"], dzv_lin, need_dx=need_input_grad
    )
    if not need_input_grad:
        return None, None, grads
    dv_in = d_vertex_cat[..., :c_in]
    de_in = (
        de_in
        + a_source.T @ d_vertex_cat[..., c_in : 2 * c_in]
        + a_target.T @ d_vertex_cat[..., 2 * c_in :]
    )
    return dv_in, de_in, grads
