"""Plain-text network checkpoints.

Layout::

    NET layers=<n> lambdas=<l1,l2,l3>
    DENSE in=<i> out=<o> activation=<tanh|linear>
    <one line per weight row>
    <bias line>

    QUANTUM qubits=<n> sublayers=<s> map=<identity|chebyshev> order=<k> reupload=<0|1>
    <angle line>

Values carry 17 significant digits, so a roundtrip is exact.
"""

from __future__ import annotations

import os
from typing import TextIO, Union

import numpy as np

from .layers import DenseLayer, QuantumLayer
from .network import HybridNet, Layer

__all__ = ["dump_net", "dumps_net", "load_net", "loads_net"]

PathOrStream = Union[str, os.PathLike, TextIO]


def _row(values: np.ndarray) -> str:
    return " ".join(f"{v:.17g}" for v in values)


def _dump_layer(layer: Layer) -> str:
    if isinstance(layer, DenseLayer):
        head = f"DENSE in={layer.n_in} out={layer.n_out} activation={layer.activation.value}"
        rows = [_row(w) for w in layer.weights] + [_row(layer.biases)]
    else:
        head = (
            f"QUANTUM qubits={layer.n_qubits} sublayers={layer.sublayers} map={layer.feature_map.value} "
            f"order={layer.chebyshev_order} reupload={int(layer.reupload)}"
        )
        rows = [_row(layer.theta)]
    return "\n".join([head, *rows])


def dumps_net(net: HybridNet) -> str:
    head = f"NET layers={len(net.layers)} lambdas={','.join(f'{v:.17g}' for v in net.lambdas)}"
    return head + "\n" + "\n\n".join(_dump_layer(layer) for layer in net.layers) + "\n"


def _fields(line: str, kind: str) -> dict[str, str]:
    parts = line.split()
    if not parts or parts[0] != kind:
        raise ValueError(f"expected a {kind} header, got {line!r}")
    try:
        return dict(p.split("=", 1) for p in parts[1:])
    except ValueError as exc:
        raise ValueError(f"malformed {kind} header {line!r}") from exc


def _load_layer(block: str) -> Layer:
    lines = block.strip().splitlines()
    kind = lines[0].split()[0]
    try:
        if kind == "DENSE":
            f = _fields(lines[0], "DENSE")
            n_in, n_out = int(f["in"]), int(f["out"])
            data = [np.array(line.split(), dtype=np.float64) for line in lines[1:]]
            if len(data) != n_out + 1 or any(d.size != n_in for d in data[:-1]) or data[-1].size != n_out:
                raise ValueError(f"dense block does not match its {n_out}x{n_in} header")
            return DenseLayer(np.stack(data[:-1]), data[-1], f["activation"])
        if kind == "QUANTUM":
            f = _fields(lines[0], "QUANTUM")
            if len(lines) != 2:
                raise ValueError("quantum block needs exactly one angle line")
            theta = np.array(lines[1].split(), dtype=np.float64)
            return QuantumLayer(
                theta, int(f["qubits"]), int(f["sublayers"]), f["map"], int(f["order"]), bool(int(f["reupload"]))
            )
    except KeyError as exc:
        raise ValueError(f"{kind} header is missing {exc.args[0]!r}") from exc
    raise ValueError(f"unknown layer kind {kind!r}")


def loads_net(text: str) -> HybridNet:
    lines = text.splitlines()
    if not lines:
        raise ValueError("empty checkpoint")
    f = _fields(lines[0], "NET")
    try:
        n_layers = int(f["layers"])
        lambdas = tuple(float(v) for v in f["lambdas"].split(","))
    except (KeyError, ValueError) as exc:
        raise ValueError(f"malformed NET header {lines[0]!r}") from exc
    blocks = [b for b in "\n".join(lines[1:]).split("\n\n") if b.strip()]
    if len(blocks) != n_layers:
        raise ValueError(f"expected {n_layers} layer blocks, found {len(blocks)}")
    return HybridNet(tuple(_load_layer(b) for b in blocks), lambdas)


def dump_net(net: HybridNet, target: PathOrStream) -> None:
    text = dumps_net(net)
    if hasattr(target, "write"):
        target.write(text)
    else:
        with open(target, "w", encoding="utf-8") as fh:
            fh.write(text)


def load_net(source: PathOrStream) -> HybridNet:
    if hasattr(source, "read"):
        return loads_net(source.read())
    with open(source, encoding="utf-8") as fh:
        return loads_net(fh.read())
