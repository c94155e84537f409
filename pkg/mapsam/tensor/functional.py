"""
Functional Module
Neural-network operators with hand-derived backward rules
"""

import math
from typing import Optional

import numpy as np

from ..errors import NumericError, ShapeError
from .tensor import Tensor, as_tensor, make_result, matmul, reshape

_GELU_C = math.sqrt(2.0 / math.pi)


def softmax(x: Tensor, axis: int = -1) -> Tensor:
    """
    Softmax along `axis`

    −∞ entries map to exactly 0. A row that is entirely −∞ becomes uniform and passes
    no gradient back.

    Raises:
        NumericError: on NaN or +∞ input
    """
    x = as_tensor(x)
    data = x.data
    if np.isnan(data).any() or np.isposinf(data).any():
        raise NumericError("softmax received NaN or +inf input")
    peak = data.max(axis=axis, keepdims=True)
    dead = np.isneginf(peak)
    shifted = data - np.where(dead, 0.0, peak)
    e = np.exp(shifted)
    total = e.sum(axis=axis, keepdims=True)
    width = data.shape[axis]
    out = np.where(dead, 1.0 / width, e / np.where(dead, 1.0, total))

    def backward_fn(g):
        inner = (g * out).sum(axis=axis, keepdims=True)
        grad = out * (g - inner)
        return (np.where(dead, 0.0, grad),)

    return make_result(out, (x,), backward_fn, "softmax")


def sigmoid(x: Tensor) -> Tensor:
    x = as_tensor(x)
    out = sigmoid_array(x.data)
    return make_result(out, (x,), lambda g: (g * out * (1.0 - out),), "sigmoid")


def sigmoid_array(values: np.ndarray) -> np.ndarray:
    # tanh form is overflow-free and gives sigmoid(0) == 0.5 exactly
    return 0.5 * (1.0 + np.tanh(0.5 * np.asarray(values, dtype=np.float64)))


def gelu(x: Tensor) -> Tensor:
    """GELU, tanh approximation"""
    x = as_tensor(x)
    d = x.data
    inner = _GELU_C * (d + 0.044715 * d ** 3)
    t = np.tanh(inner)
    out = 0.5 * d * (1.0 + t)

    def backward_fn(g):
        local = 0.5 * (1.0 + t) + 0.5 * d * (1.0 - t * t) * _GELU_C * (1.0 + 3.0 * 0.044715 * d * d)
        return (g * local,)

    return make_result(out, (x,), backward_fn, "gelu")


def layernorm(x: Tensor, gain: Tensor, bias: Tensor, eps: float = 1e-6) -> Tensor:
    """Normalize over the last axis, then apply per-channel gain and bias"""
    x, gain, bias = as_tensor(x), as_tensor(gain), as_tensor(bias)
    width = x.shape[-1]
    if width < 1:
        raise ShapeError("layernorm: normalization axis is empty")
    if gain.shape != (width,) or bias.shape != (width,):
        raise ShapeError(f"layernorm: gain {gain.shape} / bias {bias.shape} do not match input {x.shape}")
    mu = x.data.mean(axis=-1, keepdims=True)
    centered = x.data - mu
    var = (centered * centered).mean(axis=-1, keepdims=True)
    inv = 1.0 / np.sqrt(var + eps)
    xhat = centered * inv
    out = xhat * gain.data + bias.data
    lead = tuple(range(x.ndim - 1))

    def backward_fn(g):
        dxhat = g * gain.data
        dx = inv / width * (
            width * dxhat
            - dxhat.sum(axis=-1, keepdims=True)
            - xhat * (dxhat * xhat).sum(axis=-1, keepdims=True)
        )
        return dx, (g * xhat).sum(axis=lead), g.sum(axis=lead)

    return make_result(out, (x, gain, bias), backward_fn, "layernorm")


def linear(x: Tensor, weight: Tensor, bias: Optional[Tensor] = None) -> Tensor:
    """x · Wᵀ + b with W stored out×in"""
    out = matmul(x, weight.T)
    if bias is not None:
        out = out + bias
    return out


def conv1x1(x: Tensor, w: Tensor, b: Optional[Tensor] = None) -> Tensor:
    """
    Per-pixel linear map of an H×W×Cin grid with a Cin×Cout weight

    Computed as reshape to (H·W)×Cin, matmul, bias, reshape back.
    """
    x, w = as_tensor(x), as_tensor(w)
    if x.ndim != 3 or w.ndim != 2 or x.shape[-1] != w.shape[0]:
        raise ShapeError(f"conv1x1: input {x.shape} does not match weight {w.shape}")
    h, wd, cin = x.shape
    out = matmul(reshape(x, (h * wd, cin)), w)
    if b is not None:
        out = out + b
    return reshape(out, (h, wd, w.shape[1]))


def bilinear_matrix(in_size: int, out_size: int) -> np.ndarray:
    """
    Row-stochastic out×in resampling matrix, align_corners=False convention
    """
    if in_size < 1 or out_size < 1:
        raise ShapeError(f"bilinear resampling needs positive sizes, got {in_size} -> {out_size}")
    scale = in_size / out_size
    src = (np.arange(out_size, dtype=np.float64) + 0.5) * scale - 0.5
    src = np.maximum(src, 0.0)
    i0 = np.minimum(np.floor(src).astype(np.int64), in_size - 1)
    i1 = np.minimum(i0 + 1, in_size - 1)
    lam = src - i0
    matrix = np.zeros((out_size, in_size), dtype=np.float64)
    rows = np.arange(out_size)
    np.add.at(matrix, (rows, i0), 1.0 - lam)
    np.add.at(matrix, (rows, i1), lam)
    return matrix


def interpolate_bilinear(x: Tensor, out_h: int, out_w: int) -> Tensor:
    """Resample an h×w×C grid to out_h×out_w×C"""
    x = as_tensor(x)
    if x.ndim != 3:
        raise ShapeError(f"interpolate_bilinear expects an h×w×C grid, got {x.shape}")
    if out_h < 1 or out_w < 1:
        raise ShapeError(f"interpolate_bilinear: zero target size {out_h}×{out_w}")
    ry = bilinear_matrix(x.shape[0], out_h)
    rx = bilinear_matrix(x.shape[1], out_w)
    out = np.einsum("ia,jb,abc->ijc", ry, rx, x.data)

    def backward_fn(g):
        return (np.einsum("ia,jb,ijc->abc", ry, rx, g),)

    return make_result(out, (x,), backward_fn, "interpolate_bilinear")
