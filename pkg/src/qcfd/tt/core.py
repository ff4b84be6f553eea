"""Quantized tensor trains: MPS/MPO containers, SVD encoding, truncation and arithmetic.

Index conventions (fixed project-wide):

* a vector of length ``2**L`` is reshaped big-endian, site 0 carrying the most
  significant bit, so ``u[j] = U[i_1, ..., i_L]`` with ``j = (i_1 ... i_L)_2``;
* MPS cores are shaped ``(r_left, 2, r_right)``;
* MPO cores are shaped ``(b_left, out, in, b_right)`` so that
  ``(O u)[out] = sum_in O[out, in] u[in]``.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np
from numpy.typing import NDArray

from ..grid import Field, GridSpec

__all__ = [
    "DENSE_GUARD",
    "Mpo",
    "Mps",
    "TruncationPolicy",
    "decode_mps",
    "encode_mps",
    "mpo_add",
    "mpo_apply",
    "mpo_compress",
    "mpo_deparallelize",
    "mpo_identity",
    "mpo_product",
    "mpo_scale",
    "mpo_to_dense",
    "mps_add",
    "mps_hadamard",
    "mps_scale",
    "truncate",
]

DENSE_GUARD = 12

Array = NDArray[np.float64]


@dataclass(frozen=True)
class TruncationPolicy:
    """Bond cap ``max_chi`` (``None`` = uncapped) and relative singular-value cutoff.

    Singular values ``s <= svd_cutoff * s_max`` are dropped; with ``svd_cutoff == 0``
    only exact zeros are dropped.
    """

    max_chi: int | None = None
    svd_cutoff: float = 1e-12

    def __post_init__(self) -> None:
        if self.max_chi is not None and self.max_chi < 1:
            raise ValueError(f"max_chi must be >= 1, got {self.max_chi}")
        if not 0.0 <= self.svd_cutoff < 1.0:
            raise ValueError(f"svd_cutoff must lie in [0, 1), got {self.svd_cutoff}")

    @classmethod
    def unlimited(cls) -> TruncationPolicy:
        return cls(max_chi=None, svd_cutoff=0.0)

    def keep(self, s: Array) -> int:
        """Number of leading singular values retained (at least one)."""
        if s.size == 0 or s[0] <= 0.0:
            return 1
        if self.svd_cutoff > 0.0:
            keep = int(np.count_nonzero(s > self.svd_cutoff * s[0]))
        else:
            keep = int(np.count_nonzero(s > 0.0))
        if self.max_chi is not None:
            keep = min(keep, self.max_chi)
        return max(keep, 1)


def _check_chain(cores: Sequence[Array], ndim: int, kind: str) -> None:
    if len(cores) == 0:
        raise ValueError(f"{kind} needs at least one core")
    for k, core in enumerate(cores):
        if core.ndim != ndim:
            raise ValueError(f"{kind} core {k} has {core.ndim} dims, expected {ndim}")
        if any(d != 2 for d in core.shape[1:-1]):
            raise ValueError(f"{kind} core {k} has physical dims {core.shape[1:-1]}, expected 2")
    if cores[0].shape[0] != 1 or cores[-1].shape[-1] != 1:
        raise ValueError(f"{kind} boundary bonds must be 1")
    for k in range(len(cores) - 1):
        if cores[k].shape[-1] != cores[k + 1].shape[0]:
            raise ValueError(
                f"{kind} bond mismatch between cores {k} and {k + 1}: "
                f"{cores[k].shape[-1]} != {cores[k + 1].shape[0]}"
            )


def _freeze(cores: Sequence[Array]) -> tuple[Array, ...]:
    out = []
    for core in cores:
        # read-only float64 arrays are already owned by some chain; share them
        if not (isinstance(core, np.ndarray) and core.dtype == np.float64 and not core.flags.writeable):
            core = np.array(core, dtype=np.float64)
            core.setflags(write=False)
        out.append(core)
    return tuple(out)


def _owned(cores: Sequence[Array]) -> tuple[Array, ...]:
    """Mark freshly computed cores read-only so the constructors can share them."""
    for core in cores:
        core.setflags(write=False)
    return tuple(cores)


@dataclass(frozen=True, eq=False)
class Mps:
    """Open-boundary matrix product state with real cores ``(r_{k-1}, 2, r_k)``."""

    cores: tuple[Array, ...]

    def __post_init__(self) -> None:
        cores = _freeze(self.cores)
        _check_chain(cores, 3, "Mps")
        object.__setattr__(self, "cores", cores)

    @property
    def L(self) -> int:
        return len(self.cores)

    @property
    def bond_dims(self) -> tuple[int, ...]:
        return (1,) + tuple(c.shape[2] for c in self.cores)

    @property
    def max_bond(self) -> int:
        return max(self.bond_dims)

    def to_vector(self) -> Array:
        """Contract every core into the length ``2**L`` vector."""
        out = self.cores[0].reshape(2, -1)
        for core in self.cores[1:]:
            r = core.shape[0]
            out = (out @ core.reshape(r, -1)).reshape(-1, core.shape[2])
        return out.reshape(-1)

    @classmethod
    def zeros(cls, L: int) -> Mps:
        return cls(tuple(np.zeros((1, 2, 1)) for _ in range(L)))


@dataclass(frozen=True, eq=False)
class Mpo:
    """Matrix product operator with real cores ``(b_{k-1}, out, in, b_k)``."""

    cores: tuple[Array, ...]

    def __post_init__(self) -> None:
        cores = _freeze(self.cores)
        _check_chain(cores, 4, "Mpo")
        object.__setattr__(self, "cores", cores)

    @property
    def L(self) -> int:
        return len(self.cores)

    @property
    def bond_dims(self) -> tuple[int, ...]:
        return (1,) + tuple(c.shape[3] for c in self.cores)

    @property
    def max_bond(self) -> int:
        return max(self.bond_dims)


# -- low level sweeps ---------------------------------------------------------------
# The helpers below work on generic chains of (r, d, r') cores so that MPOs can be
# compressed by viewing each (b, 2, 2, b') core as (b, 4, b').


def _svd(mat: Array) -> tuple[Array, Array, Array]:
    try:
        return np.linalg.svd(mat, full_matrices=False)
    except np.linalg.LinAlgError:  # pragma: no cover - LAPACK gesdd convergence failure
        import scipy.linalg

        return scipy.linalg.svd(mat, full_matrices=False, lapack_driver="gesvd")


def _tt_svd(vector: Array, dims: Sequence[int], policy: TruncationPolicy) -> tuple[list[Array], float]:
    cores: list[Array] = []
    discarded = 0.0
    rest = np.asarray(vector, dtype=np.float64).reshape(1, -1)
    rank = 1
    for d in dims[:-1]:
        mat = rest.reshape(rank * d, -1)
        u, s, vt = _svd(mat)
        keep = policy.keep(s)
        discarded += float(np.sum(s[keep:] ** 2))
        cores.append(u[:, :keep].reshape(rank, d, keep))
        rest = s[:keep, None] * vt[:keep]
        rank = keep
    cores.append(rest.reshape(rank, dims[-1], 1))
    return cores, discarded


def _right_orthonormalize(cores: list[Array]) -> None:
    """In-place right-to-left QR sweep; the norm ends up in ``cores[0]``."""
    for k in range(len(cores) - 1, 0, -1):
        r, d, rr = cores[k].shape
        q, rmat = np.linalg.qr(cores[k].reshape(r, d * rr).T)
        cores[k] = q.T.reshape(-1, d, rr)
        cores[k - 1] = np.tensordot(cores[k - 1], rmat.T, axes=(2, 0))


def _svd_sweep(cores: list[Array], policy: TruncationPolicy) -> float:
    """In-place left-to-right truncation of a right-orthonormal chain."""
    discarded = 0.0
    for k in range(len(cores) - 1):
        r, d, rr = cores[k].shape
        u, s, vt = _svd(cores[k].reshape(r * d, rr))
        keep = policy.keep(s)
        discarded += float(np.sum(s[keep:] ** 2))
        cores[k] = u[:, :keep].reshape(r, d, keep)
        cores[k + 1] = np.tensordot(s[:keep, None] * vt[:keep], cores[k + 1], axes=(1, 0))
    return discarded


# -- MPS ----------------------------------------------------------------------------


def _as_vector(f: Field | Array) -> Array:
    values = f.values if isinstance(f, Field) else np.asarray(f, dtype=np.float64)
    if values.ndim != 1:
        raise ValueError("expected a one-dimensional vector")
    return values


def _n_sites(n: int) -> int:
    L = int(n).bit_length() - 1
    if L < 1 or 2**L != n:
        raise ValueError(f"vector length {n} is not a power of two >= 2")
    return L


def encode_mps(
    f: Field | Array,
    policy: TruncationPolicy | None = None,
    *,
    return_discarded: bool = False,
) -> Mps | tuple[Mps, float]:
    """Left-canonical MPS of a field by successive SVDs (TT-SVD).

    With ``return_discarded`` the summed squared singular values dropped at every
    split are returned too; the squared L2 reconstruction error never exceeds it.
    """
    policy = TruncationPolicy() if policy is None else policy
    values = _as_vector(f)
    L = _n_sites(values.size)
    if not np.any(values):
        mps, discarded = Mps.zeros(L), 0.0
    else:
        cores, discarded = _tt_svd(values, [2] * L, policy)
        mps = Mps(tuple(cores))
    return (mps, discarded) if return_discarded else mps


def decode_mps(m: Mps, spec: GridSpec) -> Field:
    """Contract the chain back into a :class:`Field` on ``spec``."""
    if m.L != spec.L:
        raise ValueError(f"Mps has {m.L} sites but the grid needs {spec.L}")
    return Field(spec, m.to_vector())


def truncate(m: Mps, policy: TruncationPolicy) -> tuple[Mps, float]:
    """Canonicalize right-to-left, then truncate left-to-right.

    Returns the left-canonical result (norm carried by the last core) and the total
    discarded weight, i.e. the sum over bonds of the dropped squared singular values.
    """
    cores = list(m.cores)
    _right_orthonormalize(cores)
    if not np.any(cores[0]):
        return Mps.zeros(m.L), 0.0
    discarded = _svd_sweep(cores, policy)
    return Mps(_owned(cores)), discarded


def mps_scale(m: Mps, alpha: float) -> Mps:
    """Multiply by a scalar, absorbed into the first core."""
    return Mps((m.cores[0] * alpha,) + m.cores[1:])


def _check_same_length(a: Mps | Mpo, b: Mps | Mpo) -> None:
    if a.L != b.L:
        raise ValueError(f"site-count mismatch: {a.L} != {b.L}")


def _block_sum(a: Sequence[Array], b: Sequence[Array]) -> list[Array]:
    L = len(a)
    if L == 1:
        return [a[0] + b[0]]
    out = []
    for k, (ca, cb) in enumerate(zip(a, b)):
        la, ra = ca.shape[0], ca.shape[-1]
        lb, rb = cb.shape[0], cb.shape[-1]
        mid = ca.shape[1:-1]
        if k == 0:
            core = np.concatenate([ca, cb], axis=-1)
        elif k == L - 1:
            core = np.concatenate([ca, cb], axis=0)
        else:
            core = np.zeros((la + lb, *mid, ra + rb))
            core[:la, ..., :ra] = ca
            core[la:, ..., ra:] = cb
        out.append(core)
    return out


def mps_add(a: Mps, b: Mps) -> Mps:
    """Sum via block-diagonal core stacking; interior bonds add."""
    _check_same_length(a, b)
    return Mps(_owned(_block_sum(a.cores, b.cores)))


def mps_hadamard(a: Mps, b: Mps) -> Mps:
    """Element-wise product via site-wise Kronecker products; bonds multiply."""
    _check_same_length(a, b)
    cores = []
    for ca, cb in zip(a.cores, b.cores):
        core = np.einsum("isj,ksl->iksjl", ca, cb)
        cores.append(core.reshape(ca.shape[0] * cb.shape[0], 2, ca.shape[2] * cb.shape[2]))
    return Mps(_owned(cores))


# -- MPO ----------------------------------------------------------------------------


def mpo_identity(L: int) -> Mpo:
    return Mpo(tuple(np.eye(2).reshape(1, 2, 2, 1) for _ in range(L)))


def mpo_scale(o: Mpo, alpha: float) -> Mpo:
    return Mpo((o.cores[0] * alpha,) + o.cores[1:])


def mpo_add(a: Mpo, b: Mpo) -> Mpo:
    _check_same_length(a, b)
    return Mpo(_owned(_block_sum(a.cores, b.cores)))


def mpo_apply(o: Mpo, m: Mps) -> Mps:
    """MPO-MPS contraction; output bonds are ``b_k * r_k``."""
    _check_same_length(o, m)
    cores = []
    for w, a in zip(o.cores, m.cores):
        core = np.einsum("aoib,rix->arobx", w, a)
        cores.append(core.reshape(w.shape[0] * a.shape[0], 2, w.shape[3] * a.shape[2]))
    return Mps(_owned(cores))


def mpo_product(a: Mpo, b: Mpo) -> Mpo:
    """The MPO of the matrix product ``a @ b``."""
    _check_same_length(a, b)
    cores = []
    for wa, wb in zip(a.cores, b.cores):
        core = np.einsum("aomb,cmid->acoibd", wa, wb)
        cores.append(core.reshape(wa.shape[0] * wb.shape[0], 2, 2, wa.shape[3] * wb.shape[3]))
    return Mpo(_owned(cores))


def mpo_to_dense(o: Mpo) -> Array:
    """Materialize the ``2**L x 2**L`` matrix (guarded to ``L <= 12``)."""
    if o.L > DENSE_GUARD:
        raise ValueError(f"refusing to materialize an MPO with L={o.L} > {DENSE_GUARD}")
    out = o.cores[0][0]  # (out, in, b)
    for w in o.cores[1:]:
        n_out, n_in, _ = out.shape
        out = np.einsum("oib,bpjc->opijc", out, w).reshape(n_out * 2, n_in * 2, w.shape[3])
    return out[:, :, 0]


def mpo_compress(o: Mpo, cutoff: float = 1e-13) -> Mpo:
    """Exact-preserving bond reduction: drop singular values below ``cutoff * s_max``."""
    cores = [c.reshape(c.shape[0], 4, c.shape[3]) for c in o.cores]
    _right_orthonormalize(cores)
    _svd_sweep(cores, TruncationPolicy(max_chi=None, svd_cutoff=cutoff))
    return Mpo(tuple(c.reshape(c.shape[0], 2, 2, c.shape[2]) for c in cores))


def _parallel_groups(vectors: Array, rtol: float) -> tuple[list[int], Array]:
    """Greedy grouping of the columns of ``vectors`` into mutually parallel classes.

    Returns the kept column indices and ``T`` with ``vectors ~= vectors[:, kept] @ T``.
    Zero columns are dropped entirely.
    """
    n = vectors.shape[1]
    kept: list[int] = []
    transfer = np.zeros((n, n))
    for j in range(n):
        col = vectors[:, j]
        norm_j = np.linalg.norm(col)
        if norm_j == 0.0:
            continue
        for slot, i in enumerate(kept):
            ref = vectors[:, i]
            t = float(col @ ref) / float(ref @ ref)
            if np.linalg.norm(col - t * ref) <= rtol * norm_j:
                transfer[slot, j] = t
                break
        else:
            transfer[len(kept), j] = 1.0
            kept.append(j)
    if not kept:  # all-zero bond: keep one zero channel
        kept, transfer[0, 0] = [0], 0.0
    return kept, transfer[: len(kept)]


def mpo_deparallelize(o: Mpo, rtol: float = 1e-12) -> Mpo:
    """Exact bond reduction by merging parallel bond channels.

    Unlike :func:`mpo_compress` this performs no SVD: duplicated channels (for
    instance the identity channel shared by the terms of a sum of shift operators)
    are merged with their exact proportionality factors, so integer-structured
    operators stay exact.
    """
    cores = [np.array(c) for c in o.cores]
    L = len(cores)
    for k in range(L - 1):  # columns of core k
        a, _, _, b = cores[k].shape
        kept, transfer = _parallel_groups(cores[k].reshape(-1, b), rtol)
        cores[k] = cores[k][..., kept]
        cores[k + 1] = np.tensordot(transfer, cores[k + 1], axes=(1, 0))
    for k in range(L - 1, 0, -1):  # rows of core k
        b = cores[k].shape[0]
        kept, transfer = _parallel_groups(cores[k].reshape(b, -1).T, rtol)
        cores[k] = cores[k][kept]
        cores[k - 1] = np.tensordot(cores[k - 1], transfer.T, axes=(3, 0))
    return Mpo(tuple(cores))
