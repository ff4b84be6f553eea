"""Explicit-Euler Burgers time marching carried out entirely in truncated MPS form."""

from __future__ import annotations

import time
from dataclasses import dataclass, field

import numpy as np

from ..grid import BlowUpError, Boundary, BurgersConfig, snapshot_steps
from .core import (
    Mpo,
    Mps,
    TruncationPolicy,
    encode_mps,
    mpo_apply,
    mps_add,
    mps_hadamard,
    mps_scale,
    truncate,
)
from .operators import derivative_mpos

__all__ = ["TtDiagnostics", "TtSolveConfig", "tt_rhs", "tt_solve", "tt_step"]


@dataclass(frozen=True)
class TtSolveConfig:
    burgers: BurgersConfig
    policy: TruncationPolicy = TruncationPolicy()
    record_diagnostics: bool = True
    per_op_truncation: bool = False

    def __post_init__(self) -> None:
        if self.burgers.spec.boundary is not Boundary.PERIODIC:
            raise ValueError("TT solves support periodic grids only")
        if self.burgers.spec.L < 2:
            raise ValueError("TT solves need L >= 2")


@dataclass
class TtDiagnostics:
    """Per-step records of a TT solve. ``seconds`` is wall time and not reproducible."""

    max_bond: list[int] = field(default_factory=list)
    discarded_weight: list[float] = field(default_factory=list)
    seconds: list[float] = field(default_factory=list)
    initial_discarded: float = 0.0
    snapshots: list[tuple[int, Mps]] = field(default_factory=list)

    @property
    def accumulated_truncation(self) -> float:
        """Sum over steps of ``sqrt(discarded_weight)``: a bound-style error budget."""
        return float(np.sum(np.sqrt(self.discarded_weight)))


def _maybe_truncate(m: Mps, policy: TruncationPolicy | None) -> Mps:
    return m if policy is None else truncate(m, policy)[0]


def tt_rhs(u: Mps, nu: float, d1: Mpo, d2: Mpo, op_policy: TruncationPolicy | None = None) -> Mps:
    """``-u * (D1 u) + nu * (D2 u)`` as an MPS, exact unless ``op_policy`` is given."""
    du = _maybe_truncate(mpo_apply(d1, u), op_policy)
    advection = _maybe_truncate(mps_hadamard(u, du), op_policy)
    diffusion = _maybe_truncate(mpo_apply(d2, u), op_policy)
    return mps_add(mps_scale(advection, -1.0), mps_scale(diffusion, nu))


def tt_step(
    u: Mps,
    nu: float,
    dt: float,
    d1: Mpo,
    d2: Mpo,
    policy: TruncationPolicy,
    *,
    per_op_truncation: bool = False,
) -> tuple[Mps, float]:
    """One Euler step followed by a single truncation of the summed MPS.

    Intermediate products are recompressed losslessly (cutoff 0, no cap), which only
    removes structurally redundant bond directions. With ``per_op_truncation`` they
    are truncated with ``policy`` instead, trading accuracy for smaller bonds.
    """
    if not (u.L == d1.L == d2.L):
        raise ValueError(f"site-count mismatch: u={u.L}, D1={d1.L}, D2={d2.L}")
    op_policy = policy if per_op_truncation else TruncationPolicy.unlimited()
    rhs = tt_rhs(u, nu, d1, d2, op_policy)
    return truncate(mps_add(u, mps_scale(rhs, dt)), policy)


def tt_solve(cfg: TtSolveConfig) -> tuple[Mps, TtDiagnostics]:
    """Encode the initial condition, then march ``cfg.burgers.n_steps`` Euler steps.

    Snapshots are stored at the same steps as :func:`qcfd.grid.fdm_solve` uses.
    """
    burgers = cfg.burgers
    spec = burgers.spec
    d1, d2 = derivative_mpos(spec.L, spec.dx)
    exact = encode_mps(burgers.initial_field(), TruncationPolicy.unlimited())
    u, initial_discarded = truncate(exact, cfg.policy)
    diag = TtDiagnostics(initial_discarded=initial_discarded)
    total = burgers.n_steps
    record = set(snapshot_steps(total, burgers.snapshot_stride))
    if 0 in record:
        diag.snapshots.append((0, u))
    for step in range(1, total + 1):
        start = time.perf_counter()
        u, discarded = tt_step(
            u, burgers.nu, burgers.dt, d1, d2, cfg.policy, per_op_truncation=cfg.per_op_truncation
        )
        norm = float(np.linalg.norm(u.cores[-1]))  # left-canonical: norm sits in the last core
        if not np.isfinite(norm) or not np.isfinite(discarded):
            raise BlowUpError(f"non-finite MPS norm after step {step}", step, diag)
        if cfg.policy.max_chi is not None and u.max_bond > cfg.policy.max_chi:
            raise AssertionError(f"bond {u.max_bond} exceeds cap {cfg.policy.max_chi}")
        if cfg.record_diagnostics:
            diag.max_bond.append(u.max_bond)
            diag.discarded_weight.append(discarded)
            diag.seconds.append(time.perf_counter() - start)
        if step in record:
            diag.snapshots.append((step, u))
    return u, diag
