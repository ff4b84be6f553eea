"""Exact MPOs for cyclic shifts and the periodic central-difference stencils.

The shift MPOs act as binary increment/decrement with carry propagating from the
least significant site (the last one) towards the first; the carry left over at the
first site is dropped, which is exactly the periodic wrap-around.
"""

from __future__ import annotations

import numpy as np

from .core import Mpo, mpo_add, mpo_deparallelize, mpo_identity, mpo_scale

__all__ = ["derivative_mpos", "shift_mpo"]


def _carry_core(direction: int) -> np.ndarray:
    """Core ``W[c_out, out, in, c_in]`` with ``in = out + direction * c_in`` on one bit."""
    core = np.zeros((2, 2, 2, 2))
    for out in (0, 1):
        for c_in in (0, 1):
            if direction > 0:
                bit_in, c_out = out ^ c_in, out & c_in
            else:
                bit_in, c_out = out ^ c_in, (1 - out) & c_in
            core[c_out, out, bit_in, c_in] = 1.0
    return core


def shift_mpo(L: int, direction: int = 1) -> Mpo:
    """Cyclic shift ``(S u)_j = u_{(j + direction) mod 2**L}`` for ``direction = +-1``.

    Bond dimension 2: the bond carries the carry (or borrow) bit.
    """
    if direction not in (1, -1):
        raise ValueError("direction must be +1 or -1")
    if L < 1:
        raise ValueError("L must be >= 1")
    core = _carry_core(direction)
    if L == 1:
        return Mpo((core.sum(axis=0, keepdims=True)[..., 1:],))
    first = core.sum(axis=0, keepdims=True)  # drop the final carry: periodic wrap
    last = core[..., 1:]  # unit carry enters at the least significant bit
    return Mpo((first,) + (core,) * (L - 2) + (last,))


def derivative_mpos(L: int, dx: float, *, compress: bool = True) -> tuple[Mpo, Mpo]:
    """Periodic central first-derivative and Laplacian MPOs.

    ``D1 = (S+ - S-) / (2 dx)`` and ``D2 = (S+ - 2 I + S-) / dx**2`` assembled by
    MPO addition (bonds 4 and 5). With ``compress`` the duplicated identity channels
    are merged exactly, leaving bond dimension at most 3 and bit-exact entries.
    Scalars live in the first core.
    """
    if L < 2:
        raise ValueError("derivative MPOs need L >= 2")
    up, down = shift_mpo(L, 1), shift_mpo(L, -1)
    d1 = mpo_scale(mpo_add(up, mpo_scale(down, -1.0)), 1.0 / (2.0 * dx))
    d2 = mpo_add(mpo_add(up, mpo_scale(mpo_identity(L), -2.0)), down)
    d2 = mpo_scale(d2, 1.0 / dx**2)
    if compress:
        d1, d2 = mpo_deparallelize(d1), mpo_deparallelize(d2)
    return d1, d2
