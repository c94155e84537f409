"""
Gradient Check Module
Central finite-difference oracle for tape gradients
"""

from typing import Callable, Iterable, Optional, Sequence, Tuple

import numpy as np

from .tensor import Tensor, get_tape, no_grad

DEFAULT_STEP = 1e-3
ERROR_FLOOR = 1e-8


def relative_error(analytic: float, numeric: float, scale: float = 0.0) -> float:
    """
    |a − n| / max(|a|, |n|, scale, 1e-8)

    `scale` is the gradient magnitude of the whole input tensor, so that entries whose true
    gradient is near zero are measured against the tensor's own gradient size.
    """
    return abs(analytic - numeric) / max(abs(analytic), abs(numeric), scale, ERROR_FLOOR)


def central_difference(f: Callable[[], Tensor], tensor: Tensor, index: Tuple[int, ...], h: float) -> float:
    """(f(x + h) − f(x − h)) / 2h for one entry of tensor.data"""
    original = tensor.data[index]
    with no_grad():
        tensor.data[index] = original + h
        plus = f().item()
        tensor.data[index] = original - h
        minus = f().item()
    tensor.data[index] = original
    return (plus - minus) / (2.0 * h)


def numerical_gradient(
    f: Callable[[], Tensor],
    tensor: Tensor,
    index: Tuple[int, ...],
    h: float = DEFAULT_STEP,
    extrapolate: bool = False,
) -> float:
    """
    Central difference of scalar f() w.r.t. one entry of tensor.data

    With extrapolate, steps h and h/2 are combined as (4·D(h/2) − D(h)) / 3, which cancels
    the h² error term.
    """
    coarse = central_difference(f, tensor, index, h)
    if not extrapolate:
        return coarse
    fine = central_difference(f, tensor, index, h / 2.0)
    return (4.0 * fine - coarse) / 3.0


def analytic_gradients(f: Callable[[], Tensor], inputs: Sequence[Tensor]) -> list:
    get_tape().clear()
    for t in inputs:
        t.grad = None
    f().backward()
    return [np.zeros_like(t.data) if t.grad is None else t.grad.copy() for t in inputs]


def gradient_check(
    f: Callable[[], Tensor],
    inputs: Sequence[Tensor],
    h: float = DEFAULT_STEP,
    indices: Optional[Iterable[Tuple[int, Tuple[int, ...]]]] = None,
) -> float:
    """
    Compare tape gradients of scalar f() with central differences

    Args:
        f: Closure recomputing the scalar loss from the current input values
        inputs: Tensors (requires_grad=True) to check
        h: Finite-difference step
        indices: Optional (input position, entry index) pairs; all entries when None

    Returns:
        Largest relative error seen
    """
    grads = analytic_gradients(f, inputs)
    if indices is None:
        indices = [(i, idx) for i, t in enumerate(inputs) for idx in np.ndindex(t.shape)]
    numeric = {}
    for i, idx in indices:
        numeric[(i, idx)] = numerical_gradient(f, inputs[i], idx, h)
    scales = {}
    for (i, _), value in numeric.items():
        scales[i] = max(scales.get(i, 0.0), abs(value), float(np.max(np.abs(grads[i]), initial=0.0)))
    worst = 0.0
    for (i, idx), value in numeric.items():
        worst = max(worst, relative_error(float(grads[i][idx]), value, scales[i]))
    return worst
