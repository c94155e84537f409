"""
Schedule Module
Linear warmup followed by polynomial (power 0.9) decay
"""

from dataclasses import dataclass

from ..errors import ConfigError

DECAY_POWER = 0.9


@dataclass
class Schedule:
    """B_lr, T_w and T_max; T_max counts from t = 0, not from the end of warmup"""

    base_lr: float
    warmup_iters: int
    max_iters: int

    def __call__(self, t: int) -> float:
        return lr_at(self, t)


def lr_at(schedule: Schedule, t: int) -> float:
    """
    Learning rate at iteration t

    t ≤ T_w: t·B_lr/T_w. Afterwards B_lr·(1 − (t − T_w)/T_max)^0.9 with the base clamped at 0.
    T_w = 0 skips warmup; T_max = 0 disables decay.
    """
    if t < 0:
        raise ConfigError(f"iteration must be non-negative, got {t}")
    if schedule.warmup_iters > 0 and t <= schedule.warmup_iters:
        return t * schedule.base_lr / schedule.warmup_iters
    if schedule.max_iters <= 0:
        return schedule.base_lr
    base = 1.0 - (t - schedule.warmup_iters) / schedule.max_iters
    return schedule.base_lr * max(0.0, base) ** DECAY_POWER
