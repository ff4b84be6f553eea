"""CSV helpers shared by every solver so that any two outputs can be compared."""

from __future__ import annotations

import os
from typing import Sequence

import numpy as np
from numpy.typing import NDArray

__all__ = ["read_csv", "write_csv"]


def write_csv(path: str | os.PathLike, header: Sequence[str], columns: Sequence[NDArray]) -> None:
    """Write equal-length columns with a one-line header and 17 significant digits."""
    data = np.column_stack([np.asarray(c, dtype=np.float64).ravel() for c in columns])
    np.savetxt(path, data, fmt="%.17g", delimiter=",", header=",".join(header), comments="")


def read_csv(path: str | os.PathLike) -> tuple[list[str], NDArray[np.float64]]:
    """Read a file written by :func:`write_csv`; returns the header and an (rows, cols) array."""
    with open(path, encoding="utf-8") as fh:
        header = fh.readline().strip().split(",")
        if not header or header == [""]:
            raise ValueError(f"{path}: missing CSV header")
        data = np.loadtxt(fh, delimiter=",", ndmin=2)
    if data.size and data.shape[1] != len(header):
        raise ValueError(f"{path}: {data.shape[1]} columns but header names {len(header)}")
    return header, data.reshape(-1, len(header))
