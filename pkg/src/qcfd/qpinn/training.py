"""Training loop, evaluation against the finite-difference reference, and defaults."""

from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple

import numpy as np
from numpy.typing import NDArray

from ..grid import BurgersConfig, fdm_solve, snapshot_steps
from ..optim import OptimizerConfig, minimize
from .network import HybridNet, hybrid_forward
from .physics import DEFAULT_FD_STEP, CollocationSets, loss_and_grad

__all__ = [
    "DEFAULT_PINN_OPTIMIZER",
    "Evaluation",
    "LossRecord",
    "TrainResult",
    "evaluate_against_fdm",
    "train",
]

Array = NDArray[np.float64]

DEFAULT_PINN_OPTIMIZER = OptimizerConfig(learning_rate=0.005, iterations=2500, tolerance=0.0, divergence_patience=100)


class LossRecord(NamedTuple):
    epoch: int
    total: float
    residual: float
    bc: float
    ic: float


@dataclass(frozen=True, eq=False)
class TrainResult:
    net: HybridNet
    """Parameters with the lowest total loss seen."""
    history: list[LossRecord]
    final_net: HybridNet


def train(
    net: HybridNet,
    sets: CollocationSets,
    burgers: BurgersConfig,
    opt: OptimizerConfig = DEFAULT_PINN_OPTIMIZER,
    *,
    h: float = DEFAULT_FD_STEP,
) -> TrainResult:
    """Full-batch first-order training of ``net`` on the physics-informed loss.

    ``history[0]`` holds the initial losses and ``history[k]`` the losses after ``k``
    updates. Raises :class:`qcfd.optim.DivergenceError` if the total keeps rising.
    """
    records: list[LossRecord] = []

    def value_and_grad(p: Array) -> tuple[float, Array]:
        losses, grad = loss_and_grad(net.with_params(p), sets, burgers, h=h)
        records.append(LossRecord(len(records), losses.total, losses.residual, losses.bc, losses.ic))
        return losses.total, grad

    result = minimize(value_and_grad, net.params, opt)
    return TrainResult(net.with_params(result.x), records, net.with_params(result.x_final))


class Evaluation(NamedTuple):
    x: Array
    t: Array
    predicted: Array
    """(n_t, n_x) network values on the reference grid."""
    reference: Array
    relative_l2: float


def evaluate_against_fdm(net: HybridNet, burgers: BurgersConfig, n_times: int = 21) -> Evaluation:
    """Compare the network with the finite-difference solution on its space-time grid.

    The reference is sampled at ``n_times`` evenly spaced recorded steps (the grid's
    ghost end point ``x = domain_length`` is excluded).
    """
    total = burgers.n_steps
    stride = max(1, total // max(1, n_times - 1))
    cfg = BurgersConfig(
        burgers.spec, burgers.nu, burgers.dt, burgers.t_final, burgers.initial_condition,
        burgers.allow_unstable, stride,
    )
    _, snaps = fdm_solve(cfg)
    steps = snapshot_steps(total, stride)
    t = np.minimum(np.array(steps) * burgers.dt, burgers.t_final)
    x = burgers.spec.x
    reference = np.stack([s.values for s in snaps])
    predicted = np.asarray(hybrid_forward(net, x[None, :], t[:, None]))
    rel = float(np.linalg.norm(predicted - reference) / np.linalg.norm(reference))
    return Evaluation(x, t, predicted, reference, rel)
