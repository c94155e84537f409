"""
Optimizer Module
AdamW with decoupled weight decay and global-norm gradient clipping
"""

import logging
from typing import Dict, List, Sequence, Tuple

import numpy as np

from ..config import DEFAULT_ADAM_EPS, DEFAULT_BETAS, DEFAULT_WEIGHT_DECAY
from ..errors import OptimizerError
from ..tensor import Parameter

logger = logging.getLogger(__name__)


class AdamW:
    """
    Adaptive-moment optimizer over named parameters

    Frozen parameters (requires_grad False) are skipped and never touched.
    """

    def __init__(
        self,
        named_params: Sequence[Tuple[str, Parameter]],
        betas: Tuple[float, float] = DEFAULT_BETAS,
        eps: float = DEFAULT_ADAM_EPS,
        weight_decay: float = DEFAULT_WEIGHT_DECAY,
    ):
        self.named_params: List[Tuple[str, Parameter]] = list(named_params)
        self.beta1, self.beta2 = betas
        self.eps = eps
        self.weight_decay = weight_decay
        self.step_count = 0
        self.exp_avg: Dict[str, np.ndarray] = {name: np.zeros_like(p.data) for name, p in self.named_params}
        self.exp_avg_sq: Dict[str, np.ndarray] = {name: np.zeros_like(p.data) for name, p in self.named_params}

    def step(self, lr: float):
        optimizer_step(self, lr)

    def zero_grad(self):
        for _, p in self.named_params:
            p.grad = None

    def state_dict(self) -> Dict[str, np.ndarray]:
        state = {}
        for name, _ in self.named_params:
            state[f"m.{name}"] = self.exp_avg[name].copy()
            state[f"v.{name}"] = self.exp_avg_sq[name].copy()
        return state

    def load_state_dict(self, state: Dict[str, np.ndarray], step_count: int):
        for name, _ in self.named_params:
            if f"m.{name}" not in state or f"v.{name}" not in state:
                raise OptimizerError(f"optimizer state has no moments for '{name}'")
            self.exp_avg[name] = np.array(state[f"m.{name}"], dtype=np.float64)
            self.exp_avg_sq[name] = np.array(state[f"v.{name}"], dtype=np.float64)
        self.step_count = step_count


def optimizer_step(optimizer: AdamW, lr: float):
    """
    One AdamW update: decay param by lr·wd, then param −= lr·m̂/(√v̂ + ε)

    Raises:
        OptimizerError: if a trainable parameter has no gradient
    """
    active = [(name, p) for name, p in optimizer.named_params if p.requires_grad]
    for name, p in active:
        if p.grad is None:
            raise OptimizerError(f"trainable parameter '{name}' has no gradient")
    optimizer.step_count += 1
    t = optimizer.step_count
    b1, b2 = optimizer.beta1, optimizer.beta2
    for name, p in active:
        g = p.grad
        m = optimizer.exp_avg[name] = b1 * optimizer.exp_avg[name] + (1.0 - b1) * g
        v = optimizer.exp_avg_sq[name] = b2 * optimizer.exp_avg_sq[name] + (1.0 - b2) * g * g
        m_hat = m / (1.0 - b1 ** t)
        v_hat = v / (1.0 - b2 ** t)
        if optimizer.weight_decay:
            p.data -= lr * optimizer.weight_decay * p.data
        p.data -= lr * m_hat / (np.sqrt(v_hat) + optimizer.eps)


def clip_grad_norm(params: Sequence[Parameter], max_norm: float) -> float:
    """Scale gradients in place so their global L2 norm is at most max_norm; returns the norm before clipping"""
    grads = [p.grad for p in params if p.grad is not None]
    total = float(np.sqrt(sum(float((g * g).sum()) for g in grads)))
    if max_norm > 0 and total > max_norm:
        factor = max_norm / (total + 1e-12)
        for p in params:
            if p.grad is not None:
                p.grad = p.grad * factor
    return total
