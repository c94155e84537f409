"""
DoRA Module
Low-rank (LoRA) and weight-decomposed low-rank (DoRA) adaptation of frozen linear layers
"""

from enum import Enum
from typing import Optional, Tuple

import numpy as np

from ..errors import ConfigError, ShapeError, SingularityError
from ..tensor import Linear, Module, Parameter, Tensor, linear, matmul


class AdaptationMode(str, Enum):
    """How an AdaptedLinear computes its effective weight"""
    FROZEN = "frozen"
    LORA = "lora"
    DORA = "dora"


def column_norms(weight: Tensor) -> Tensor:
    """
    Euclidean norm of every column of a d×k matrix

    Returns:
        1×k tensor, differentiable
    """
    if weight.ndim != 2 or weight.shape[0] < 1:
        raise ShapeError(f"column_norms expects a d×k matrix with d >= 1, got {weight.shape}")
    return (weight * weight).sum(axis=0, keepdims=True).sqrt()


def lora_merged(w0: Tensor, a: Tensor, b: Tensor, scale: float = 1.0) -> Tensor:
    """
    W0 + scale·B·A

    Args:
        w0: Frozen base weight (d×k)
        a: Down projection (r×k)
        b: Up projection (d×r)
        scale: alpha / r

    Raises:
        ShapeError: if the rank or outer dimensions disagree
    """
    d, k = w0.shape
    if a.ndim != 2 or b.ndim != 2 or b.shape[1] != a.shape[0] or b.shape[0] != d or a.shape[1] != k:
        raise ShapeError(f"rank mismatch: W0 {w0.shape}, A {a.shape}, B {b.shape}")
    delta = matmul(b, a)
    if scale != 1.0:
        delta = delta * scale
    return w0 + delta


def dora_merged(w0: Tensor, a: Tensor, b: Tensor, m: Tensor, scale: float = 1.0) -> Tensor:
    """
    m · (W0 + BA) / ‖W0 + BA‖_c

    Column j of the result has norm |m_j|.

    Raises:
        SingularityError: if W0 + BA has a zero column
    """
    if m.shape != (1, w0.shape[1]):
        raise ShapeError(f"magnitude vector must be 1×{w0.shape[1]}, got {m.shape}")
    direction = lora_merged(w0, a, b, scale)
    norms = column_norms(direction)
    zero = np.flatnonzero(norms.data == 0.0)
    if zero.size:
        raise SingularityError(f"W0 + BA has zero-norm columns {zero.tolist()}")
    return direction * (m / norms)


class AdaptedLinear(Linear):
    """
    Linear layer with a frozen base weight W0 (d×k) and optional LoRA/DoRA components

    In lora/dora mode only A, B (and m for dora) are trainable. B starts at zero and
    m at ‖W0‖_c, so a freshly adapted layer reproduces the frozen layer exactly.
    """

    def __init__(self, in_features: int, out_features: int, rng: np.random.Generator, bias: bool = True):
        super().__init__(in_features, out_features, rng, bias=bias)
        self.mode = AdaptationMode.FROZEN
        self.rank = 0
        self.scale = 1.0
        self.lora_a: Optional[Parameter] = None
        self.lora_b: Optional[Parameter] = None
        self.magnitude: Optional[Parameter] = None

    def adapt(self, mode: AdaptationMode, rank: int, rng: np.random.Generator, scale: float = 1.0, init_std: float = 0.01):
        """
        Freeze W0 and attach adaptation parameters

        Args:
            mode: lora or dora
            rank: r, positive and at most min(d, k)
            rng: Source for the Gaussian init of A
            scale: alpha / r
            init_std: Standard deviation of A's init
        """
        mode = AdaptationMode(mode)
        d, k = self.weight.shape
        if mode == AdaptationMode.FROZEN:
            raise ConfigError("adapt() needs lora or dora mode")
        if rank < 1 or rank > min(d, k):
            raise ShapeError(f"rank {rank} must lie in [1, {min(d, k)}] for a {d}×{k} layer")
        self.weight.requires_grad = False
        self.weight.grad = None
        if self.bias is not None:
            self.bias.requires_grad = False
            self.bias.grad = None
        self.mode = mode
        self.rank = rank
        self.scale = scale
        self.lora_a = Parameter(rng.normal(0.0, init_std, size=(rank, k)))
        self.lora_b = Parameter(np.zeros((d, rank)))
        if mode == AdaptationMode.DORA:
            self.magnitude = Parameter(column_norms(Tensor(self.weight.data)).data.copy())

    def merged_weight(self) -> Tensor:
        """Effective d×k weight for the current mode, recomputed on every call"""
        if self.mode == AdaptationMode.FROZEN:
            return self.weight
        if self.mode == AdaptationMode.LORA:
            return lora_merged(self.weight, self.lora_a, self.lora_b, self.scale)
        return dora_merged(self.weight, self.lora_a, self.lora_b, self.magnitude, self.scale)

    def forward(self, x: Tensor) -> Tensor:
        return adapted_forward(self, x)


def adapted_forward(layer: AdaptedLinear, x: Tensor) -> Tensor:
    """x · W′ᵀ + b with W′ the mode-appropriate merged weight"""
    return linear(x, layer.merged_weight(), layer.bias)


def trainable_parameter_count(model: Module) -> Tuple[int, int]:
    """
    Count parameters with gradients enabled against all parameters

    Returns:
        (trainable, total)
    """
    params = model.parameters()
    trainable = sum(p.size for p in params if p.requires_grad)
    total = sum(p.size for p in params)
    return trainable, total
