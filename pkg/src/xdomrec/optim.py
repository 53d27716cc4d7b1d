"""First-order update rules: Adam for CF pre-training, plain gradient steps
for the adversarial alignment phase.

All updates are pure: they return new arrays and leave their inputs intact.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

__all__ = ["AdamState", "adam_step", "sgd_step", "sgd_combined_step"]


@dataclass(frozen=True)
class AdamState:
    """Per-parameter Adam accumulators with the canonical defaults."""

    first_moment: np.ndarray
    second_moment: np.ndarray
    step_count: int = 0
    beta1: float = 0.9
    beta2: float = 0.999
    epsilon: float = 1e-8
    learning_rate: float = 0.001

    def __post_init__(self):
        if self.first_moment.shape != self.second_moment.shape:
            raise ValueError("moment tensors must share their shape")
        if self.step_count < 0:
            raise ValueError("step_count must be >= 0")
        for name in ("beta1", "beta2", "epsilon", "learning_rate"):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be > 0")

    @classmethod
    def for_param(cls, param, learning_rate=0.001, beta1=0.9, beta2=0.999, epsilon=1e-8):
        param = np.asarray(param)
        return cls(
            first_moment=np.zeros_like(param, dtype=np.float64),
            second_moment=np.zeros_like(param, dtype=np.float64),
            learning_rate=learning_rate,
            beta1=beta1,
            beta2=beta2,
            epsilon=epsilon,
        )


def adam_step(state: AdamState, param, grad):
    """One bias-corrected Adam update.

    Returns:
        (new_param, new_state); neither input is modified.
    """
    param = np.asarray(param, dtype=np.float64)
    grad = np.asarray(grad, dtype=np.float64)
    if param.shape != grad.shape or param.shape != state.first_moment.shape:
        raise ValueError(
            f"shape mismatch: param {param.shape}, grad {grad.shape}, "
            f"state {state.first_moment.shape}"
        )
    if not np.all(np.isfinite(grad)):
        raise ValueError("gradient contains non-finite entries")
    t = state.step_count + 1
    m = state.beta1 * state.first_moment + (1.0 - state.beta1) * grad
    v = state.beta2 * state.second_moment + (1.0 - state.beta2) * grad * grad
    m_hat = m / (1.0 - state.beta1 ** t)
    v_hat = v / (1.0 - state.beta2 ** t)
    new_param = param - state.learning_rate * m_hat / (np.sqrt(v_hat) + state.epsilon)
    return new_param, replace(state, first_moment=m, second_moment=v, step_count=t)


def sgd_step(param, grad, rate):
    """Plain descent: ``param - rate * grad``."""
    param = np.asarray(param, dtype=np.float64)
    grad = np.asarray(grad, dtype=np.float64)
    if param.shape != grad.shape:
        raise ValueError(f"shape mismatch: param {param.shape}, grad {grad.shape}")
    return param - rate * grad


def sgd_combined_step(param, grad_pred, grad_adv, rate_pred, rate_adv):
    """Descend the prediction loss while ascending the adversarial loss.

    Computes ``param - (rate_pred * grad_pred - rate_adv * grad_adv)``: the
    two gradients enter with opposite signs, which is what makes the
    embedding update adversarial with respect to the domain classifier.
    """
    param = np.asarray(param, dtype=np.float64)
    grad_pred = np.asarray(grad_pred, dtype=np.float64)
    grad_adv = np.asarray(grad_adv, dtype=np.float64)
    if param.shape != grad_pred.shape or param.shape != grad_adv.shape:
        raise ValueError(
            f"shape mismatch: param {param.shape}, grad_pred {grad_pred.shape}, "
            f"grad_adv {grad_adv.shape}"
        )
    return param - (rate_pred * grad_pred - rate_adv * grad_adv)
