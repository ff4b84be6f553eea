"""Feed-forward networks mixing dense layers with at most one quantum layer."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Any, Sequence, Union

import numpy as np
from numpy.typing import NDArray

from .layers import Activation, DenseLayer, FeatureMap, QuantumLayer

__all__ = [
    "HybridNet",
    "Layer",
    "classical_reference_net",
    "hybrid_forward",
    "hybrid_reference_net",
    "param_count",
]

Array = NDArray[np.float64]
Layer = Union[DenseLayer, QuantumLayer]


@dataclass(frozen=True, eq=False)
class HybridNet:
    """Layer stack plus the loss weights ``(residual, initial, boundary)``."""

    layers: tuple[Layer, ...]
    lambdas: tuple[float, float, float] = (1.0, 1.0, 1.0)

    def __post_init__(self) -> None:
        layers = tuple(self.layers)
        if not layers:
            raise ValueError("a network needs at least one layer")
        for k, (a, b) in enumerate(zip(layers, layers[1:])):
            if a.n_out != b.n_in:
                raise ValueError(f"layer {k} outputs width {a.n_out} but layer {k + 1} expects {b.n_in}")
        if sum(isinstance(layer, QuantumLayer) for layer in layers) > 1:
            raise ValueError("at most one quantum layer is supported")
        lambdas = tuple(float(v) for v in self.lambdas)
        if len(lambdas) != 3 or min(lambdas) < 0:
            raise ValueError(f"loss weights must be three non-negative reals, got {self.lambdas}")
        object.__setattr__(self, "layers", layers)
        object.__setattr__(self, "lambdas", lambdas)

    @property
    def n_in(self) -> int:
        return self.layers[0].n_in

    @property
    def n_out(self) -> int:
        return self.layers[-1].n_out

    @property
    def n_params(self) -> int:
        return sum(layer.n_params for layer in self.layers)

    @property
    def params(self) -> Array:
        return np.concatenate([layer.params for layer in self.layers])

    def with_params(self, flat: Array) -> HybridNet:
        flat = np.asarray(flat, dtype=np.float64)
        if flat.shape != (self.n_params,):
            raise ValueError(f"network needs {self.n_params} parameters, got {flat.shape}")
        layers, start = [], 0
        for layer in self.layers:
            layers.append(layer.with_params(flat[start : start + layer.n_params]))
            start += layer.n_params
        return HybridNet(tuple(layers), self.lambdas)

    def with_lambdas(self, lambdas: Sequence[float]) -> HybridNet:
        return HybridNet(self.layers, tuple(lambdas))

    def forward(self, x: Array) -> tuple[Array, list[Any]]:
        """Evaluate a batch ``x`` of shape (B, n_in); returns (B, n_out) and the layer caches."""
        x = np.asarray(x, dtype=np.float64)
        if x.ndim != 2 or x.shape[1] != self.n_in:
            raise ValueError(f"network expects inputs of width {self.n_in}, got {x.shape}")
        caches = []
        for layer in self.layers:
            x, cache = layer.forward(x)
            caches.append(cache)
        return x, caches

    def backward(self, caches: list[Any], gy: Array) -> tuple[Array, Array]:
        """Input gradient and flat parameter gradient of ``sum(gy * outputs)``."""
        grads = []
        for layer, cache in zip(reversed(self.layers), reversed(caches)):
            gy, gp = layer.backward(cache, gy)
            grads.append(gp)
        return gy, np.concatenate(grads[::-1])

    def __call__(self, x: Array) -> Array:
        """Scalar-output shortcut: (B, n_in) -> (B,)."""
        out, _ = self.forward(x)
        return out[:, 0] if self.n_out == 1 else out


def param_count(net: HybridNet | Layer) -> int:
    """Total number of trainable parameters."""
    return net.n_params


def hybrid_forward(net: HybridNet, x: Array | float, t: Array | float) -> Array | float:
    """Network output ``u(x, t)``; broadcasts over array inputs."""
    if net.n_in != 2 or net.n_out != 1:
        raise ValueError(f"u(x, t) needs a 2 -> 1 network, got {net.n_in} -> {net.n_out}")
    xb, tb = np.broadcast_arrays(np.asarray(x, dtype=np.float64), np.asarray(t, dtype=np.float64))
    out = net(np.stack([xb.ravel(), tb.ravel()], axis=1)).reshape(xb.shape)
    return float(out) if out.ndim == 0 else out


def classical_reference_net(seed: int = 42, width: int = 20, hidden: int = 4) -> HybridNet:
    """``2 -> width x hidden (tanh) -> 1 (linear)``; 1341 parameters at the defaults."""
    rng = np.random.default_rng(seed)
    sizes = [2] + [width] * hidden
    layers: list[Layer] = [DenseLayer.glorot(rng, a, b) for a, b in zip(sizes, sizes[1:])]
    layers.append(DenseLayer.glorot(rng, width, 1, Activation.LINEAR))
    return HybridNet(tuple(layers))


def hybrid_reference_net(
    seed: int = 42,
    width: int = 20,
    n_qubits: int = 5,
    sublayers: int = 3,
    feature_map: FeatureMap | str = FeatureMap.IDENTITY,
    chebyshev_order: int = 1,
    reupload: bool = False,
) -> HybridNet:
    """``2 -> width -> n_qubits (tanh) -> quantum -> width (tanh) -> 1``; 321 parameters at the defaults."""
    rng = np.random.default_rng(seed)
    layers: tuple[Layer, ...] = (
        DenseLayer.glorot(rng, 2, width),
        DenseLayer.glorot(rng, width, n_qubits),
        QuantumLayer.random(
            rng, n_qubits, sublayers, feature_map=feature_map, chebyshev_order=chebyshev_order, reupload=reupload
        ),
        DenseLayer.glorot(rng, n_qubits, width),
        DenseLayer.glorot(rng, width, 1, Activation.LINEAR),
    )
    return HybridNet(layers)
