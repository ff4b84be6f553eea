"""Classical and hybrid quantum physics-informed networks for the Burgers problem."""

from .checkpoint import dump_net, dumps_net, load_net, loads_net
from .layers import Activation, DenseLayer, FeatureMap, QuantumLayer, cnot_ring
from .network import (
    HybridNet,
    classical_reference_net,
    hybrid_forward,
    hybrid_reference_net,
    param_count,
)
from .physics import (
    DEFAULT_FD_STEP,
    CollocationSets,
    PinnLosses,
    ResidualStencil,
    boundary_data,
    hybrid_grad,
    initial_data,
    loss_and_grad,
    pinn_losses,
)
from .training import DEFAULT_PINN_OPTIMIZER, Evaluation, LossRecord, TrainResult, evaluate_against_fdm, train

__all__ = [
    "Activation",
    "CollocationSets",
    "DEFAULT_FD_STEP",
    "DEFAULT_PINN_OPTIMIZER",
    "DenseLayer",
    "Evaluation",
    "FeatureMap",
    "HybridNet",
    "LossRecord",
    "PinnLosses",
    "QuantumLayer",
    "ResidualStencil",
    "TrainResult",
    "boundary_data",
    "classical_reference_net",
    "cnot_ring",
    "dump_net",
    "dumps_net",
    "evaluate_against_fdm",
    "hybrid_forward",
    "hybrid_grad",
    "hybrid_reference_net",
    "initial_data",
    "load_net",
    "loads_net",
    "loss_and_grad",
    "param_count",
    "pinn_losses",
    "train",
]
