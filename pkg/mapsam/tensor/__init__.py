"""
Tensor Package
Dense f64 tensors, the gradient tape and the operators every model layer is built from
"""

from .tensor import (
    Node,
    Tape,
    Tensor,
    as_tensor,
    backward,
    clamp,
    concat,
    get_tape,
    matmul,
    no_grad,
)
from .functional import (
    bilinear_matrix,
    conv1x1,
    gelu,
    interpolate_bilinear,
    layernorm,
    linear,
    sigmoid,
    sigmoid_array,
    softmax,
)
from .module import LayerNorm, Linear, Module, Parameter

__all__ = [
    'Node',
    'Tape',
    'Tensor',
    'as_tensor',
    'backward',
    'clamp',
    'concat',
    'get_tape',
    'matmul',
    'no_grad',
    'bilinear_matrix',
    'conv1x1',
    'gelu',
    'interpolate_bilinear',
    'layernorm',
    'linear',
    'sigmoid',
    'sigmoid_array',
    'softmax',
    'LayerNorm',
    'Linear',
    'Module',
    'Parameter',
]
