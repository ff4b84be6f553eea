"""Uniform 1D grids, finite-difference stencils and the explicit-Euler Burgers reference solver.

Everything else in the package is checked against the dense solver defined here.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from numpy.typing import NDArray

__all__ = [
    "Boundary",
    "BlowUpError",
    "BurgersConfig",
    "Field",
    "GridSpec",
    "StabilityError",
    "boundary_terms",
    "derivative_matrices",
    "fdm_rhs",
    "fdm_solve",
    "fdm_step",
    "n_steps",
    "snapshot_steps",
    "stability_bound",
]


class Boundary(str, enum.Enum):
    PERIODIC = "periodic"
    DIRICHLET = "dirichlet"


class StabilityError(ValueError):
    """Raised when a time step exceeds the explicit stability bound."""


class BlowUpError(RuntimeError):
    """Raised when a time march produces non-finite values."""

    def __init__(self, message: str, step: int, diagnostics: object | None = None) -> None:
        super().__init__(message)
        self.step = step
        self.diagnostics = diagnostics


@dataclass(frozen=True)
class GridSpec:
    """Uniform grid with ``N = 2**L`` points ``x_j = j * dx`` on ``[0, domain_length)``.

    For Dirichlet grids ``x_0`` is the left boundary point and the right boundary value
    lives on the ghost point ``x_N = domain_length``.
    """

    L: int
    domain_length: float = 1.0
    boundary: Boundary = Boundary.PERIODIC
    bc_values: tuple[float, float] | None = None

    def __post_init__(self) -> None:
        if not isinstance(self.L, (int, np.integer)) or self.L < 1:
            raise ValueError(f"L must be a positive integer, got {self.L!r}")
        if not self.domain_length > 0:
            raise ValueError(f"domain_length must be positive, got {self.domain_length!r}")
        object.__setattr__(self, "boundary", Boundary(self.boundary))
        if self.boundary is Boundary.PERIODIC:
            if self.bc_values is not None:
                raise ValueError("periodic grids carry no boundary values")
        else:
            values = (0.0, 0.0) if self.bc_values is None else self.bc_values
            if len(values) != 2:
                raise ValueError("Dirichlet grids need exactly two boundary values")
            object.__setattr__(self, "bc_values", (float(values[0]), float(values[1])))

    @property
    def N(self) -> int:
        return 2**self.L

    @property
    def dx(self) -> float:
        return self.domain_length / self.N

    @property
    def x(self) -> NDArray[np.float64]:
        return np.arange(self.N) * self.dx


@dataclass(frozen=True, eq=False)
class Field:
    """Samples of u on a grid. ``values`` is stored read-only."""

    spec: GridSpec
    values: NDArray[np.float64]

    def __post_init__(self) -> None:
        values = np.array(self.values, dtype=np.float64)
        if values.shape != (self.spec.N,):
            raise ValueError(f"expected {self.spec.N} values, got shape {values.shape}")
        values.setflags(write=False)
        object.__setattr__(self, "values", values)

    @property
    def x(self) -> NDArray[np.float64]:
        return self.spec.x

    def norm(self) -> float:
        return float(np.linalg.norm(self.values))


@dataclass(frozen=True, eq=False)
class BurgersConfig:
    """Viscous Burgers problem ``u_t = -u u_x + nu u_xx`` marched with explicit Euler.

    ``initial_condition`` is ``"sin"`` (``sin(2 pi x / length)``), ``"neg_sin_half"``
    (``-sin(pi x)``) or an explicit array of grid values.
    """

    spec: GridSpec
    nu: float
    dt: float
    t_final: float
    initial_condition: str | NDArray[np.float64] = "sin"
    allow_unstable: bool = False
    snapshot_stride: int | None = None

    def __post_init__(self) -> None:
        if self.nu < 0:
            raise ValueError(f"nu must be >= 0, got {self.nu}")
        if not self.dt > 0:
            raise ValueError(f"dt must be > 0, got {self.dt}")
        if self.t_final < 0:
            raise ValueError(f"t_final must be >= 0, got {self.t_final}")
        if isinstance(self.initial_condition, str):
            if self.initial_condition not in ("sin", "neg_sin_half"):
                raise ValueError(f"unknown initial condition {self.initial_condition!r}")
        elif np.shape(self.initial_condition) != (self.spec.N,):
            raise ValueError("custom initial condition must have one value per grid point")
        if not self.allow_unstable:
            bound = stability_bound(self.spec, self.nu, np.max(np.abs(self.initial_field().values)))
            if self.dt > bound:
                raise StabilityError(
                    f"dt={self.dt:g} exceeds the explicit stability bound {bound:.6g} "
                    "(set allow_unstable to override)"
                )

    def initial_field(self) -> Field:
        x = self.spec.x
        ic = self.initial_condition
        if isinstance(ic, str):
            if ic == "sin":
                values = np.sin(2.0 * np.pi * x / self.spec.domain_length)
            else:
                values = -np.sin(np.pi * x)
        else:
            values = np.asarray(ic, dtype=np.float64)
        if self.spec.boundary is Boundary.DIRICHLET:
            values = np.array(values)
            values[0] = self.spec.bc_values[0]
        return Field(self.spec, values)

    @property
    def n_steps(self) -> int:
        return n_steps(self.t_final, self.dt)


def n_steps(t_final: float, dt: float) -> int:
    """``ceil(t_final / dt)``, tolerant to the rounding in e.g. ``0.2 / 1e-4``."""
    return max(0, math.ceil(t_final / dt - 1e-9))


def snapshot_steps(total: int, stride: int | None = None) -> list[int]:
    """Step indices at which trajectories are recorded: 0, stride, 2*stride, ..., total."""
    if stride is None:
        stride = max(1, total // 100)
    steps = list(range(0, total + 1, stride))
    if steps[-1] != total:
        steps.append(total)
    return steps


def stability_bound(spec: GridSpec, nu: float, u_max: float) -> float:
    """Largest explicit-Euler step allowed: ``min(dx**2 / (2 nu), dx / max|u|)``."""
    dx = spec.dx
    diffusive = dx * dx / (2.0 * nu) if nu > 0 else math.inf
    advective = dx / max(float(u_max), 1e-12)
    return min(diffusive, advective)


@lru_cache(maxsize=32)
def _derivative_matrices(spec: GridSpec) -> tuple[NDArray[np.float64], NDArray[np.float64]]:
    n, dx = spec.N, spec.dx
    shift_up = np.roll(np.eye(n), 1, axis=1)  # (S u)_i = u_{i+1 mod N}
    shift_down = shift_up.T.copy()
    if spec.boundary is Boundary.DIRICHLET:
        shift_up[n - 1, 0] = 0.0
        shift_down[0, n - 1] = 0.0
    d1 = (shift_up - shift_down) / (2.0 * dx)
    d2 = (shift_up - 2.0 * np.eye(n) + shift_down) / (dx * dx)
    d1.setflags(write=False)
    d2.setflags(write=False)
    return d1, d2


def derivative_matrices(spec: GridSpec) -> tuple[NDArray[np.float64], NDArray[np.float64]]:
    """Central first-derivative and Laplacian matrices (N x N).

    Periodic grids give the circulant forms; Dirichlet grids drop the wrap-around
    entries, the missing neighbours being supplied by :func:`boundary_terms`.
    """
    d1, d2 = _derivative_matrices(spec)
    return d1.copy(), d2.copy()


def boundary_terms(spec: GridSpec) -> tuple[NDArray[np.float64], NDArray[np.float64]]:
    """Ghost-value contributions ``(b1, b2)`` so that ``D u + b`` is the full stencil."""
    b1 = np.zeros(spec.N)
    b2 = np.zeros(spec.N)
    if spec.boundary is Boundary.DIRICHLET:
        left, right = spec.bc_values
        dx = spec.dx
        b1[0], b1[-1] = -left / (2 * dx), right / (2 * dx)
        b2[0], b2[-1] = left / dx**2, right / dx**2
    return b1, b2


def fdm_rhs(u: Field, nu: float) -> NDArray[np.float64]:
    """Spatial operator ``-u * (D1 u) + nu * (D2 u)``."""
    d1, d2 = _derivative_matrices(u.spec)
    b1, b2 = boundary_terms(u.spec)
    v = u.values
    return -v * (d1 @ v + b1) + nu * (d2 @ v + b2)


def fdm_step(u: Field, nu: float, dt: float, *, allow_unstable: bool = False) -> Field:
    """One explicit Euler step ``u + dt * (-u * (D1 u) + nu * (D2 u))``."""
    if not allow_unstable:
        bound = stability_bound(u.spec, nu, np.max(np.abs(u.values)))
        if dt > bound:
            raise StabilityError(f"dt={dt:g} exceeds the explicit stability bound {bound:.6g}")
    new = u.values + dt * fdm_rhs(u, nu)
    if u.spec.boundary is Boundary.DIRICHLET:
        new[0] = u.spec.bc_values[0]
    return Field(u.spec, new)


def fdm_solve(cfg: BurgersConfig) -> tuple[Field, list[Field]]:
    """March the initial condition ``cfg.n_steps`` times.

    Returns the final field and snapshots taken at :func:`snapshot_steps`. The
    stability check is done once against the initial condition; a later blow-up is
    caught by the finiteness check instead.
    """
    u = cfg.initial_field()
    total = cfg.n_steps
    record = set(snapshot_steps(total, cfg.snapshot_stride))
    snapshots = [u] if 0 in record else []
    for step in range(1, total + 1):
        with np.errstate(over="ignore", invalid="ignore"):  # reported below instead
            u = fdm_step(u, cfg.nu, cfg.dt, allow_unstable=True)
        if not np.all(np.isfinite(u.values)):
            raise BlowUpError(f"non-finite values after step {step}", step, snapshots)
        if step in record:
            snapshots.append(u)
    return u, snapshots

