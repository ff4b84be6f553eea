"""First-order optimizers and a minimization loop with divergence detection."""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from numpy.typing import NDArray

__all__ = [
    "Adam",
    "DivergenceError",
    "GradientDescent",
    "Method",
    "OptimizeResult",
    "OptimizerConfig",
    "make_optimizer",
    "minimize",
]

Array = NDArray[np.float64]


class Method(str, enum.Enum):
    ADAM = "adam"
    GRADIENT_DESCENT = "gd"


@dataclass(frozen=True)
class OptimizerConfig:
    """Optimizer choice and loop controls.

    ``tolerance`` stops the loop once the cost drops to or below it. A run aborts
    when the cost increases ``divergence_patience`` iterations in a row.
    """

    method: Method = Method.ADAM
    learning_rate: float = 0.05
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    iterations: int = 500
    tolerance: float = 1e-10
    divergence_patience: int = 10

    def __post_init__(self) -> None:
        object.__setattr__(self, "method", Method(self.method))
        if not self.learning_rate > 0:
            raise ValueError(f"learning_rate must be > 0, got {self.learning_rate}")
        if self.iterations < 0:
            raise ValueError(f"iterations must be >= 0, got {self.iterations}")
        if not (0 <= self.beta1 < 1 and 0 <= self.beta2 < 1):
            raise ValueError("Adam betas must lie in [0, 1)")
        if self.divergence_patience < 1:
            raise ValueError("divergence_patience must be >= 1")


class DivergenceError(RuntimeError):
    """Raised when the cost keeps increasing; the history so far is attached."""

    def __init__(self, message: str, history: list[float]) -> None:
        super().__init__(message)
        self.history = history


class GradientDescent:
    def __init__(self, learning_rate: float) -> None:
        self.learning_rate = learning_rate

    def step(self, params: Array, grad: Array) -> Array:
        return params - self.learning_rate * grad


class Adam:
    """Adam with bias-corrected first and second moment estimates."""

    def __init__(self, learning_rate: float, beta1: float = 0.9, beta2: float = 0.999, eps: float = 1e-8) -> None:
        self.learning_rate = learning_rate
        self.beta1, self.beta2, self.eps = beta1, beta2, eps
        self.m: Array | None = None
        self.v: Array | None = None
        self.t = 0

    def step(self, params: Array, grad: Array) -> Array:
        if self.m is None:
            self.m = np.zeros_like(params)
            self.v = np.zeros_like(params)
        self.t += 1
        self.m = self.beta1 * self.m + (1 - self.beta1) * grad
        self.v = self.beta2 * self.v + (1 - self.beta2) * grad**2
        m_hat = self.m / (1 - self.beta1**self.t)
        v_hat = self.v / (1 - self.beta2**self.t)
        return params - self.learning_rate * m_hat / (np.sqrt(v_hat) + self.eps)


def make_optimizer(cfg: OptimizerConfig) -> Adam | GradientDescent:
    if cfg.method is Method.ADAM:
        return Adam(cfg.learning_rate, cfg.beta1, cfg.beta2, cfg.eps)
    return GradientDescent(cfg.learning_rate)


@dataclass
class OptimizeResult:
    x: Array
    """Parameters with the lowest cost seen."""
    cost: float
    x_final: Array
    history: list[float] = field(default_factory=list)
    converged: bool = False


def minimize(
    value_and_grad: Callable[[Array], tuple[float, Array]],
    x0: Array,
    cfg: OptimizerConfig,
) -> OptimizeResult:
    """Run ``cfg.iterations`` optimizer steps from ``x0``.

    ``history[0]`` is the initial cost and ``history[i]`` the cost after ``i`` steps.
    """
    opt = make_optimizer(cfg)
    x = np.array(x0, dtype=np.float64)
    cost, grad = value_and_grad(x)
    history = [float(cost)]
    best_x, best_cost = x.copy(), float(cost)
    rises = 0
    converged = cost <= cfg.tolerance
    for _ in range(cfg.iterations):
        if converged:
            break
        x = opt.step(x, grad)
        new_cost, grad = value_and_grad(x)
        if not math.isfinite(new_cost) or not np.all(np.isfinite(grad)):
            raise DivergenceError("non-finite cost or gradient", history + [float(new_cost)])
        rises = rises + 1 if new_cost > history[-1] else 0
        history.append(float(new_cost))
        if new_cost < best_cost:
            best_x, best_cost = x.copy(), float(new_cost)
        if rises >= cfg.divergence_patience:
            raise DivergenceError(f"cost increased {rises} consecutive iterations", history)
        converged = new_cost <= cfg.tolerance
    return OptimizeResult(best_x, best_cost, x, history, bool(converged))
