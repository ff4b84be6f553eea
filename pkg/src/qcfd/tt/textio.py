"""Plain-text serialization for MPS and MPO chains.

Layout::

    TT L=<L> bonds=<r0,...,rL> [kind=mpo]
    <core 0: one line per left-bond index, remaining axes flattened row-major>

    <core 1 ...>

Values are written with 17 significant digits so a dump/load roundtrip is exact.
"""

from __future__ import annotations

import io
import os
from typing import TextIO, Union

import numpy as np

from .core import Mpo, Mps

__all__ = ["dump_tt", "dumps_tt", "load_tt", "loads_tt"]

PathOrStream = Union[str, os.PathLike, TextIO]


def _format_core(core: np.ndarray) -> str:
    rows = core.reshape(core.shape[0], -1)
    return "\n".join(" ".join(f"{v:.17g}" for v in row) for row in rows)


def dumps_tt(chain: Mps | Mpo) -> str:
    bonds = ",".join(str(b) for b in chain.bond_dims)
    header = f"TT L={chain.L} bonds={bonds}"
    if isinstance(chain, Mpo):
        header += " kind=mpo"
    blocks = [_format_core(c) for c in chain.cores]
    return header + "\n" + "\n\n".join(blocks) + "\n"


def _parse_header(line: str) -> tuple[int, list[int], str]:
    fields = line.split()
    if not fields or fields[0] != "TT":
        raise ValueError(f"not a TT file: header {line!r}")
    entries = dict(f.split("=", 1) for f in fields[1:])
    try:
        L = int(entries["L"])
        bonds = [int(b) for b in entries["bonds"].split(",")]
    except (KeyError, ValueError) as exc:
        raise ValueError(f"malformed TT header {line!r}") from exc
    kind = entries.get("kind", "mps")
    if kind not in ("mps", "mpo"):
        raise ValueError(f"unknown TT kind {kind!r}")
    if len(bonds) != L + 1:
        raise ValueError(f"header lists {len(bonds)} bonds for L={L}")
    return L, bonds, kind


def loads_tt(text: str) -> Mps | Mpo:
    lines = text.splitlines()
    if not lines:
        raise ValueError("empty TT file")
    L, bonds, kind = _parse_header(lines[0])
    blocks = [b for b in "\n".join(lines[1:]).split("\n\n") if b.strip()]
    if len(blocks) != L:
        raise ValueError(f"expected {L} core blocks, found {len(blocks)}")
    phys = (2,) if kind == "mps" else (2, 2)
    cores = []
    for k, block in enumerate(blocks):
        values = np.array(block.split(), dtype=np.float64)
        shape = (bonds[k], *phys, bonds[k + 1])
        if values.size != int(np.prod(shape)):
            raise ValueError(f"core {k} has {values.size} values, expected shape {shape}")
        cores.append(values.reshape(shape))
    return Mps(tuple(cores)) if kind == "mps" else Mpo(tuple(cores))


def dump_tt(chain: Mps | Mpo, target: PathOrStream) -> None:
    text = dumps_tt(chain)
    if isinstance(target, io.TextIOBase) or hasattr(target, "write"):
        target.write(text)
    else:
        with open(target, "w", encoding="utf-8") as fh:
            fh.write(text)


def load_tt(source: PathOrStream) -> Mps | Mpo:
    if hasattr(source, "read"):
        return loads_tt(source.read())
    with open(source, encoding="utf-8") as fh:
        return loads_tt(fh.read())
