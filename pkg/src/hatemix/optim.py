"""Adam optimizer with bias correction, plus the parameter state it updates."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .autodiff import Tensor


@dataclass
class AdamConfig:
    learning_rate: float = 0.001
    beta1: float = 0.9
    beta2: float = 0.999
    epsilon: float = 1e-8

    def __post_init__(self):
        if not (0.0 < self.beta1 < 1.0 and 0.0 < self.beta2 < 1.0):
            raise ValueError("beta1 and beta2 must lie in (0, 1)")
        if self.learning_rate <= 0.0 or self.epsilon <= 0.0:
            raise ValueError("learning_rate and epsilon must be positive")


@dataclass
class Parameter:
    """A trainable tensor together with its Adam moment accumulators."""

    value: Tensor
    adam_m: np.ndarray = field(init=False)
    adam_v: np.ndarray = field(init=False)
    step_count: int = field(init=False, default=0)

    def __post_init__(self):
        self.adam_m = np.zeros_like(self.value.data)
        self.adam_v = np.zeros_like(self.value.data)


def adam_step(param: Parameter, grad, cfg: AdamConfig) -> Parameter:
    """One bias-corrected Adam update, applied to ``param.value`` in place."""
    g = np.asarray(grad.data if isinstance(grad, Tensor) else grad, dtype=np.float64)
    if g.shape != param.value.shape:
        raise ValueError(f"gradient shape {g.shape} != parameter shape {param.value.shape}")
    if not np.isfinite(g).all():
        raise ValueError("non-finite gradient")
    param.step_count += 1
    t = param.step_count
    param.adam_m = cfg.beta1 * param.adam_m + (1.0 - cfg.beta1) * g
    param.adam_v = cfg.beta2 * param.adam_v + (1.0 - cfg.beta2) * g * g
    m_hat = param.adam_m / (1.0 - cfg.beta1**t)
    v_hat = param.adam_v / (1.0 - cfg.beta2**t)
    param.value.data -= cfg.learning_rate * m_hat / (np.sqrt(v_hat) + cfg.epsilon)
    return param
