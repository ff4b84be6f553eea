"""Physics-informed loss for the Dirichlet Burgers problem and its parameter gradient.

Input derivatives of the network are taken by finite differences on its output:
central stencils in the interior of the space-time box and second-order one-sided
stencils where a central stencil would leave it. Every derivative is therefore a
fixed linear combination of network evaluations, which keeps the reverse pass to a
single backward sweep through the network.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, NamedTuple, Sequence

import numpy as np
from numpy.typing import NDArray
from scipy import sparse

from ..grid import Boundary, BurgersConfig
from .network import HybridNet

__all__ = [
    "DEFAULT_FD_STEP",
    "CollocationSets",
    "PinnLosses",
    "ResidualStencil",
    "boundary_data",
    "hybrid_grad",
    "initial_data",
    "loss_and_grad",
    "pinn_losses",
]

Array = NDArray[np.float64]
Model = Callable[[Array], Array]

DEFAULT_FD_STEP = 1e-4

# (offsets in units of h, weights) for first and second derivatives
_CENTRAL_1 = ((-1, 1), (-0.5, 0.5))
_FORWARD_1 = ((0, 1, 2), (-1.5, 2.0, -0.5))
_CENTRAL_2 = ((-1, 0, 1), (1.0, -2.0, 1.0))
_FORWARD_2 = ((0, 1, 2, 3), (2.0, -5.0, 4.0, -1.0))


def _check_problem(burgers: BurgersConfig) -> None:
    if burgers.spec.boundary is not Boundary.DIRICHLET:
        raise ValueError("the physics-informed problem needs a Dirichlet grid")
    if not burgers.t_final > 0:
        raise ValueError("the physics-informed problem needs t_final > 0")


@dataclass(frozen=True, eq=False)
class CollocationSets:
    """Interior, boundary and initial points as (N, 2) arrays of ``(x, t)``."""

    interior: Array
    boundary: Array
    initial: Array
    seed: int | None = None
    _stencils: dict = field(default_factory=dict, init=False, repr=False)

    def __post_init__(self) -> None:
        for name in ("interior", "boundary", "initial"):
            pts = np.array(getattr(self, name), dtype=np.float64).reshape(-1, 2)
            pts.setflags(write=False)
            object.__setattr__(self, name, pts)

    @classmethod
    def sample(
        cls,
        burgers: BurgersConfig,
        n_interior: int = 2000,
        n_boundary: int = 200,
        n_initial: int = 200,
        seed: int = 7,
    ) -> CollocationSets:
        """Uniform random points; boundary points alternate between the two ends."""
        length, t_final = burgers.spec.domain_length, burgers.t_final
        rng = np.random.default_rng(seed)
        interior = np.column_stack([rng.uniform(0, length, n_interior), rng.uniform(0, t_final, n_interior)])
        ends = np.where(np.arange(n_boundary) % 2 == 0, 0.0, length)
        boundary = np.column_stack([ends, rng.uniform(0, t_final, n_boundary)])
        initial = np.column_stack([rng.uniform(0, length, n_initial), np.zeros(n_initial)])
        return cls(interior, boundary, initial, seed)

    def stencil(self, length: float, t_final: float, h: float = DEFAULT_FD_STEP) -> ResidualStencil:
        """Residual stencil for the interior points, built once per box and step."""
        key = (float(length), float(t_final), float(h))
        if key not in self._stencils:
            self._stencils[key] = ResidualStencil.build(self.interior, length, t_final, h)
        return self._stencils[key]

    def validate(self, burgers: BurgersConfig) -> None:
        length, t_final = burgers.spec.domain_length, burgers.t_final
        if min(len(self.interior), len(self.boundary), len(self.initial)) == 0:
            raise ValueError("collocation sets must all be non-empty")
        for name in ("interior", "boundary", "initial"):
            pts = getattr(self, name)
            if np.any(pts[:, 0] < 0) or np.any(pts[:, 0] > length) or np.any(pts[:, 1] < 0) or np.any(pts[:, 1] > t_final):
                raise ValueError(f"{name} points leave the domain [0, {length}] x [0, {t_final}]")
        on_edge = np.isclose(self.boundary[:, 0], 0.0) | np.isclose(self.boundary[:, 0], length)
        if not np.all(on_edge):
            raise ValueError("boundary points must lie on x = 0 or x = domain_length")
        if np.any(self.initial[:, 1] != 0):
            raise ValueError("initial points must have t = 0")


def initial_data(burgers: BurgersConfig, x: Array) -> Array:
    """Prescribed ``u(x, 0)`` at arbitrary positions."""
    ic = burgers.initial_condition
    x = np.asarray(x, dtype=np.float64)
    if isinstance(ic, str):
        if ic == "sin":
            return np.sin(2.0 * np.pi * x / burgers.spec.domain_length)
        return -np.sin(np.pi * x)
    init = burgers.initial_field()
    grid = np.append(init.x, burgers.spec.domain_length)
    values = np.append(init.values, burgers.spec.bc_values[1])
    return np.interp(x, grid, values)


def boundary_data(burgers: BurgersConfig, points: Array) -> Array:
    left, right = burgers.spec.bc_values
    return np.where(np.isclose(points[:, 0], 0.0), left, right)


@dataclass(frozen=True, eq=False)
class ResidualStencil:
    """Evaluation points and sparse derivative operators for the interior residual.

    With ``u`` the network evaluated at ``points``, ``center @ u``, ``dx @ u``,
    ``dxx @ u`` and ``dt @ u`` approximate ``u``, ``u_x``, ``u_xx`` and ``u_t`` at the
    interior collocation points.
    """

    points: Array
    center: sparse.csr_matrix
    dx: sparse.csr_matrix
    dxx: sparse.csr_matrix
    dt: sparse.csr_matrix

    @classmethod
    def build(cls, interior: Array, length: float, t_final: float, h: float = DEFAULT_FD_STEP) -> ResidualStencil:
        n = len(interior)
        keys: dict[tuple[int, int, int], int] = {}
        points: list[tuple[float, float]] = []

        def index(i: int, ox: int, ot: int) -> int:
            key = (i, ox, ot)
            if key not in keys:
                keys[key] = len(points)
                points.append((interior[i, 0] + ox * h, interior[i, 1] + ot * h))
            return keys[key]

        center_rows = [index(i, 0, 0) for i in range(n)]
        ops = {}
        for name, pos, lo, hi, scale, order in (
            ("dx", interior[:, 0], 0.0, length, h, 1),
            ("dxx", interior[:, 0], 0.0, length, h * h, 2),
            ("dt", interior[:, 1], 0.0, t_final, h, 1),
        ):
            central, forward = (_CENTRAL_1, _FORWARD_1) if order == 1 else (_CENTRAL_2, _FORWARD_2)
            span = max(abs(o) for o in central[0]) * h
            fwd = pos - span < lo
            bwd = (pos + span > hi) & ~fwd
            rows, cols, vals = [], [], []
            for i in range(n):
                offsets, weights = forward if (fwd[i] or bwd[i]) else central
                # mirroring a one-sided stencil flips the sign of odd derivatives only
                sign = -1 if bwd[i] else 1
                wsign = sign if order == 1 else 1
                for o, w in zip(offsets, weights):
                    o = sign * o
                    j = index(i, o, 0) if name != "dt" else index(i, 0, o)
                    rows.append(i)
                    cols.append(j)
                    vals.append(wsign * w / scale)
            ops[name] = (rows, cols, vals)
        m = len(points)
        mats = {k: sparse.csr_matrix((v, (r, c)), shape=(n, m)) for k, (r, c, v) in ops.items()}
        center = sparse.csr_matrix((np.ones(n), (np.arange(n), center_rows)), shape=(n, m))
        return cls(np.array(points), center, mats["dx"], mats["dxx"], mats["dt"])


class PinnLosses(NamedTuple):
    total: float
    residual: float
    bc: float
    ic: float


@dataclass(frozen=True, eq=False)
class _Problem:
    """Everything about a loss evaluation that does not depend on the network."""

    stencil: ResidualStencil
    points: Array
    n_stencil: int
    n_boundary: int
    g_boundary: Array
    g_initial: Array
    nu: float


def _problem(sets: CollocationSets, burgers: BurgersConfig, h: float) -> _Problem:
    _check_problem(burgers)
    sets.validate(burgers)
    stencil = sets.stencil(burgers.spec.domain_length, burgers.t_final, h)
    return _Problem(
        stencil,
        np.concatenate([stencil.points, sets.boundary, sets.initial]),
        len(stencil.points),
        len(sets.boundary),
        boundary_data(burgers, sets.boundary),
        initial_data(burgers, sets.initial[:, 0]),
        burgers.nu,
    )


def _split(problem: _Problem, u: Array) -> tuple[Array, Array, Array]:
    ns, nb = problem.n_stencil, problem.n_boundary
    return u[:ns], u[ns : ns + nb], u[ns + nb :]


def _terms(problem: _Problem, u: Array):
    s = problem.stencil
    us, ub, u0 = _split(problem, u)
    uc, ux, uxx, ut = s.center @ us, s.dx @ us, s.dxx @ us, s.dt @ us
    r = ut + uc * ux - problem.nu * uxx
    eb = ub - problem.g_boundary
    e0 = u0 - problem.g_initial
    return r, eb, e0, uc, ux


def _losses(lambdas: Sequence[float], r: Array, eb: Array, e0: Array) -> PinnLosses:
    residual, bc, ic = float(np.mean(r * r)), float(np.mean(eb * eb)), float(np.mean(e0 * e0))
    l1, l2, l3 = lambdas
    return PinnLosses(l1 * residual + l2 * ic + l3 * bc, residual, bc, ic)


def pinn_losses(
    net: HybridNet | Model,
    sets: CollocationSets,
    burgers: BurgersConfig,
    *,
    h: float = DEFAULT_FD_STEP,
    lambdas: Sequence[float] | None = None,
) -> PinnLosses:
    """Residual, boundary and initial mean-squared errors and their weighted total.

    Args:
        net: A :class:`HybridNet` or any callable mapping (B, 2) points to (B,) values.
        sets: Collocation points inside the problem's space-time box.
        burgers: Problem definition; the grid must be Dirichlet.
        h: Finite-difference step for input derivatives.
        lambdas: Loss weights; defaults to the network's own, or ones for a callable.

    Returns:
        ``(total, residual, bc, ic)`` with ``total = l1 residual + l2 ic + l3 bc``.
    """
    problem = _problem(sets, burgers, h)
    if lambdas is None:
        lambdas = net.lambdas if isinstance(net, HybridNet) else (1.0, 1.0, 1.0)
    u = np.asarray(net(problem.points), dtype=np.float64).reshape(-1)
    r, eb, e0, _, _ = _terms(problem, u)
    return _losses(lambdas, r, eb, e0)


def loss_and_grad(
    net: HybridNet, sets: CollocationSets, burgers: BurgersConfig, *, h: float = DEFAULT_FD_STEP
) -> tuple[PinnLosses, Array]:
    """Losses and the gradient of the total with respect to ``net.params``.

    The loss is a function of the network values at the stencil, boundary and initial
    points, so its sensitivity to those values is formed analytically and pushed back
    through the layers in one reverse pass. Dense layers use ordinary backpropagation;
    the quantum layer uses parameter shifts for its angles.
    """
    problem = _problem(sets, burgers, h)
    out, caches = net.forward(problem.points)
    u = out[:, 0]
    r, eb, e0, uc, ux = _terms(problem, u)
    losses = _losses(net.lambdas, r, eb, e0)
    l1, l2, l3 = net.lambdas
    s = problem.stencil
    cr = 2.0 * l1 / r.size * r
    g_stencil = s.dt.T @ cr + s.center.T @ (cr * ux) + s.dx.T @ (cr * uc) - problem.nu * (s.dxx.T @ cr)
    g_boundary = 2.0 * l3 / eb.size * eb
    g_initial = 2.0 * l2 / e0.size * e0
    gu = np.concatenate([g_stencil, g_boundary, g_initial])
    _, grad = net.backward(caches, gu[:, None])
    return losses, grad


def hybrid_grad(net: HybridNet, sets: CollocationSets, burgers: BurgersConfig, *, h: float = DEFAULT_FD_STEP) -> Array:
    """Gradient of the weighted total loss over all network parameters."""
    return loss_and_grad(net, sets, burgers, h=h)[1]
