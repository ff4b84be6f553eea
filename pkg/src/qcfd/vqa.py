"""Variational explicit-Euler time marching for the Burgers equation.

A trial field is ``f = theta0 * U(theta)|0>`` with real amplitudes. Each time step
minimizes ``C = || theta0 U(theta)|0> - (I + tau O) f_prev ||^2`` where
``O = nu D2 - diag(f_prev) D1`` uses the frozen previous field, so the target
``g = (I + tau O) f_prev`` is exactly one explicit Euler step of ``f_prev``.
Expanding the norm gives ``C = theta0**2 - 2 theta0 Re<psi(theta)|g> + K`` with
``K = ||g||**2``, the form evaluated by the Hadamard-test mode.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field, replace
from functools import cached_property
from typing import Callable

import numpy as np
from numpy.typing import NDArray

from .grid import Boundary, Field, GridSpec, derivative_matrices
from .optim import OptimizerConfig, minimize
from .qsim import (
    Gate,
    GateKind,
    PauliDecomposition,
    ShotConfig,
    StateVector,
    amplitude_encode,
    apply_circuit,
    hadamard_test,
    pauli_decompose,
)

__all__ = [
    "Ansatz",
    "CostMode",
    "Layout",
    "VqaCostSpec",
    "VqaResult",
    "ansatz_state",
    "burgers_operator",
    "burgers_step_cost",
    "burgers_value_and_grad",
    "decode_ansatz",
    "fit_ansatz",
    "optimal_scale",
    "param_shift_grad",
    "real_amplitudes",
    "shift_derivative",
    "vqa_burgers_solve",
]

Array = NDArray[np.float64]


class Layout(str, enum.Enum):
    """Circuit layouts.

    ``MPS_BRICK``: ``layers`` sweeps of two-qubit blocks over neighbouring wires
    ``(q, q+1)``, each block being ``CNOT(q -> q+1)`` then ``RY(theta)`` on ``q+1``;
    ``(n - 1) * layers`` parameters.

    ``CASCADE``: ``layers`` repetitions of ``RY`` on every wire followed by a CNOT
    chain ``0 -> 1 -> ... -> n-1``, closed by a final ``RY`` layer;
    ``n * (layers + 1)`` parameters.
    """

    MPS_BRICK = "mps_brick"
    CASCADE = "cascade"


def n_params(layout: Layout, n_qubits: int, layers: int) -> int:
    layout = Layout(layout)
    if layout is Layout.MPS_BRICK:
        return (n_qubits - 1) * layers
    return n_qubits * (layers + 1)


@dataclass(frozen=True, eq=False)
class Ansatz:
    n_qubits: int
    layout: Layout
    layers: int
    theta: Array
    theta0: float = 1.0

    def __post_init__(self) -> None:
        object.__setattr__(self, "layout", Layout(self.layout))
        if self.n_qubits < 1 or (self.layout is Layout.MPS_BRICK and self.n_qubits < 2):
            raise ValueError(f"{self.layout.value} needs more qubits than {self.n_qubits}")
        if self.layers < 1:
            raise ValueError("layers must be >= 1")
        theta = np.array(self.theta, dtype=np.float64).reshape(-1)
        expected = n_params(self.layout, self.n_qubits, self.layers)
        if theta.size != expected:
            raise ValueError(f"{self.layout.value} with {self.layers} layers needs {expected} angles, got {theta.size}")
        theta.setflags(write=False)
        object.__setattr__(self, "theta", theta)
        object.__setattr__(self, "theta0", float(self.theta0))

    @classmethod
    def zeros(cls, n_qubits: int, layout: Layout | str, layers: int, theta0: float = 1.0) -> Ansatz:
        return cls(n_qubits, Layout(layout), layers, np.zeros(n_params(Layout(layout), n_qubits, layers)), theta0)

    @property
    def K(self) -> int:
        return self.theta.size

    def with_params(self, theta: Array | None = None, theta0: float | None = None) -> Ansatz:
        return replace(
            self,
            theta=self.theta if theta is None else theta,
            theta0=self.theta0 if theta0 is None else theta0,
        )

    def circuit(self) -> list[Gate]:
        n, gates, k = self.n_qubits, [], 0
        if self.layout is Layout.MPS_BRICK:
            for _ in range(self.layers):
                for q in range(n - 1):
                    gates += [Gate.cnot(q, q + 1), Gate.ry(q + 1, self.theta[k])]
                    k += 1
            return gates
        for _ in range(self.layers):
            gates += [Gate.ry(q, self.theta[k + q]) for q in range(n)]
            k += n
            gates += [Gate.cnot(q, q + 1) for q in range(n - 1)]
        gates += [Gate.ry(q, self.theta[k + q]) for q in range(n)]
        return gates


def ansatz_state(a: Ansatz) -> tuple[StateVector, float]:
    """``U(theta)|0...0>`` and the scale ``theta0``."""
    return apply_circuit(StateVector.zero(a.n_qubits), a.circuit()), a.theta0


def _axis_index(n: int, axis: int, bit: int) -> tuple:
    return (slice(None),) * axis + (bit,)


def real_amplitudes(a: Ansatz) -> Array:
    """``U(theta)|0>`` for the RY/CNOT layouts, simulated in real arithmetic.

    Equivalent to :func:`ansatz_state` (tested), without the generic gate machinery;
    this is the inner loop of dense-mode optimization.
    """
    n = a.n_qubits
    psi = np.zeros((2,) * n)
    psi[(0,) * n] = 1.0
    for gate in a.circuit():
        if gate.kind is GateKind.RY:
            q = gate.wires[0]
            c, s = np.cos(gate.theta / 2), np.sin(gate.theta / 2)
            i0, i1 = _axis_index(n, q, 0), _axis_index(n, q, 1)
            lo, hi = psi[i0], psi[i1]
            psi = np.stack([c * lo - s * hi, s * lo + c * hi], axis=q)
        else:  # CNOT
            control, target = gate.wires
            psi = psi.copy()
            sel = _axis_index(n, control, 1)
            psi[sel] = np.flip(psi[sel], axis=target - (target > control))
    return psi.reshape(-1)


def decode_ansatz(a: Ansatz) -> Array:
    """The real field ``theta0 * U(theta)|0>``."""
    return a.theta0 * real_amplitudes(a)


# -- cost ---------------------------------------------------------------------------


class CostMode(str, enum.Enum):
    DENSE = "dense"
    HADAMARD = "hadamard"


def burgers_operator(spec: GridSpec, nu: float, tau: float, previous: Array) -> Array:
    """``I + tau (nu D2 - diag(previous) D1)`` on a periodic grid."""
    if spec.boundary is not Boundary.PERIODIC:
        raise ValueError("the variational Burgers cost uses periodic stencils")
    d1, d2 = derivative_matrices(spec)
    return np.eye(spec.N) + tau * (nu * d2 - previous[:, None] * d1)


@dataclass(frozen=True, eq=False)
class VqaCostSpec:
    """Frozen data of one variational time step.

    ``previous`` is either the previous step's :class:`Ansatz` or a field. In
    Hadamard-test mode ``shots=None`` evaluates the overlaps exactly.
    """

    nu: float
    tau: float
    spec: GridSpec
    previous: Ansatz | Field | Array
    mode: CostMode = CostMode.DENSE
    shots: ShotConfig | None = None

    def __post_init__(self) -> None:
        object.__setattr__(self, "mode", CostMode(self.mode))
        if self.nu < 0 or self.tau < 0:
            raise ValueError("nu and tau must be >= 0")
        if isinstance(self.previous, Ansatz) and 2**self.previous.n_qubits != self.spec.N:
            raise ValueError(f"previous ansatz has {self.previous.n_qubits} qubits, grid has {self.spec.N} points")
        if self.spec.N < 2:
            raise ValueError("grid needs at least one qubit")

    @property
    def n_qubits(self) -> int:
        return self.spec.L

    @cached_property
    def previous_field(self) -> Array:
        prev = self.previous
        if isinstance(prev, Ansatz):
            values = decode_ansatz(prev)
        else:
            values = np.asarray(prev.values if isinstance(prev, Field) else prev, dtype=np.float64)
        if values.shape != (self.spec.N,):
            raise ValueError(f"previous field has shape {values.shape}, grid has {self.spec.N} points")
        return values

    @cached_property
    def operator(self) -> Array:
        return burgers_operator(self.spec, self.nu, self.tau, self.previous_field)

    @cached_property
    def target(self) -> Array:
        return self.operator @ self.previous_field

    @cached_property
    def K(self) -> float:
        return float(self.target @ self.target)

    @cached_property
    def operator_terms(self) -> PauliDecomposition:
        return pauli_decompose(self.operator)

    @cached_property
    def previous_preparation(self) -> tuple[list[Gate] | StateVector | None, float]:
        """How the previous state is prepared, and its scale ``theta0_prev``."""
        prev = self.previous
        if isinstance(prev, Ansatz):
            return prev.circuit(), prev.theta0
        norm = float(np.linalg.norm(self.previous_field))
        if norm == 0.0:
            return None, 0.0
        state, norm = amplitude_encode(self.previous_field)
        return state, norm


def _check_width(a: Ansatz, cost: VqaCostSpec) -> None:
    if a.n_qubits != cost.n_qubits:
        raise ValueError(f"ansatz has {a.n_qubits} qubits, cost expects {cost.n_qubits}")


def _overlap(a: Ansatz, cost: VqaCostSpec) -> float:
    """``Re<psi(theta)|g>`` with ``g = (I + tau O) f_prev``."""
    if cost.mode is CostMode.DENSE:
        return float(real_amplitudes(a) @ cost.target)
    prep, prev_scale = cost.previous_preparation
    if prep is None:
        return 0.0
    mode = "exact" if cost.shots is None else cost.shots
    return prev_scale * hadamard_test(a.circuit(), prep, cost.operator_terms, mode)


def burgers_step_cost(a: Ansatz, cost: VqaCostSpec) -> float:
    """``|| theta0 U(theta)|0> - (I + tau O) f_prev ||^2``.

    Dense mode evaluates the norm directly. Hadamard mode evaluates
    ``theta0**2 - 2 theta0 theta0_prev Re<0|U(theta)^dag (I + tau O) U_prev|0> + K``,
    with ``K`` computed densely once per step.
    """
    _check_width(a, cost)
    if cost.mode is CostMode.DENSE:
        residual = decode_ansatz(a) - cost.target
        return float(residual @ residual)
    return a.theta0**2 - 2.0 * a.theta0 * _overlap(a, cost) + cost.K


def optimal_scale(a: Ansatz, cost: VqaCostSpec) -> float:
    """Minimizer over ``theta0`` at fixed ``theta``: ``Re<psi(theta)|g>``."""
    _check_width(a, cost)
    return _overlap(a, cost)


# -- gradients ----------------------------------------------------------------------


def shift_derivative(f: Callable[[Array], float], theta: Array, j: int, rule: str = "expectation") -> float:
    """Exact derivative of ``f`` in ``theta[j]`` from two shifted evaluations.

    ``rule="expectation"``: ``f`` is an expectation value, quadratic in the gate
    ``exp(-i theta G / 2)``; ``f' = [f(theta + pi/2) - f(theta - pi/2)] / 2``.

    ``rule="overlap"``: ``f`` is linear in the gate (an amplitude or overlap);
    ``f' = [f(theta + pi) - f(theta - pi)] / 4``.
    """
    if rule == "expectation":
        shift, denom = np.pi / 2, 2.0
    elif rule == "overlap":
        shift, denom = np.pi, 4.0
    else:
        raise ValueError(f"unknown shift rule {rule!r}")
    e = np.zeros_like(theta)
    e[j] = shift
    return (f(theta + e) - f(theta - e)) / denom


def _require_involutory(a: Ansatz) -> None:
    for gate in a.circuit():
        if gate.is_parametric and gate.generator not in ("X", "Y", "Z"):
            raise ValueError("parameter-shift needs involutory (Pauli) generators")


def param_shift_grad(costfn: Callable[[Ansatz], float], a: Ansatz, *, rule: str = "overlap") -> Array:
    """Gradient over ``(theta_1..theta_K, theta0)``.

    Entries ``0..K-1`` apply :func:`shift_derivative` to ``costfn``, which is exact
    when ``costfn`` is affine in a single block of the given ``rule`` type for each
    angle (each angle appears in one gate). The Burgers cost is affine in the
    overlap ``Re<psi(theta)|g>``, hence the default. The last entry is the
    ``theta0`` derivative of a cost quadratic in ``theta0``, taken as the unit-step
    central difference, which is exact for quadratics.
    """
    _require_involutory(a)
    theta = np.array(a.theta)
    grad = np.empty(a.K + 1)
    f = lambda t: costfn(a.with_params(theta=t))  # noqa: E731
    for j in range(a.K):
        grad[j] = shift_derivative(f, theta, j, rule)
    grad[-1] = 0.5 * (costfn(a.with_params(theta0=a.theta0 + 1.0)) - costfn(a.with_params(theta0=a.theta0 - 1.0)))
    return grad


def burgers_value_and_grad(a: Ansatz, cost: VqaCostSpec) -> tuple[float, Array]:
    """Cost and its gradient; angles by overlap shifts, ``theta0`` analytically.

    ``dC/dtheta_j = -2 theta0 d<psi|g>/dtheta_j`` and ``dC/dtheta0 = 2 theta0 - 2 <psi|g>``
    (``psi`` is normalized).
    """
    _check_width(a, cost)
    theta = np.array(a.theta)
    overlap = lambda t: _overlap(a.with_params(theta=t), cost)  # noqa: E731
    b = overlap(theta)
    grad = np.empty(a.K + 1)
    for j in range(a.K):
        grad[j] = -2.0 * a.theta0 * shift_derivative(overlap, theta, j, "overlap")
    grad[-1] = 2.0 * a.theta0 - 2.0 * b
    if cost.mode is CostMode.DENSE:  # the expanded form cancels badly near the optimum
        return burgers_step_cost(a, cost), grad
    return a.theta0**2 - 2.0 * a.theta0 * b + cost.K, grad


# -- time marching ------------------------------------------------------------------


def _run(a: Ansatz, cost: VqaCostSpec, opt: OptimizerConfig) -> tuple[Ansatz, list[float]]:
    def value_and_grad(p: Array) -> tuple[float, Array]:
        return burgers_value_and_grad(a.with_params(theta=p[:-1], theta0=p[-1]), cost)

    result = minimize(value_and_grad, np.r_[a.theta, a.theta0], opt)
    return a.with_params(theta=result.x[:-1], theta0=result.x[-1]), result.history


def fit_ansatz(
    target: Array, template: Ansatz, opt: OptimizerConfig, *, seed: int = 42, init_scale: float = 0.1
) -> tuple[Ansatz, list[float]]:
    """Fit ``theta0 U(theta)|0>`` to ``target`` from small random angles.

    ``theta0`` starts at ``||target||``. The fit is the Burgers cost with
    ``tau = 0``, i.e. target ``g = target``.
    """
    target = np.asarray(target, dtype=np.float64)
    spec = GridSpec(template.n_qubits)
    cost = VqaCostSpec(0.0, 0.0, spec, target)
    rng = np.random.default_rng(seed)
    start = template.with_params(
        theta=rng.uniform(-init_scale, init_scale, template.K), theta0=float(np.linalg.norm(target))
    )
    return _run(start, cost, opt)


@dataclass
class VqaResult:
    fields: list[Field]
    """Decoded field after the initial fit (index 0) and after every time step."""
    histories: list[list[float]]
    """Cost curves: the initial fit first, then one per time step."""
    ansatze: list[Ansatz] = field(default_factory=list)


def vqa_burgers_solve(
    init: Field,
    steps: int,
    nu: float,
    tau: float,
    opt: OptimizerConfig,
    template: Ansatz,
    *,
    mode: CostMode = CostMode.DENSE,
    shots: ShotConfig | None = None,
    fit_opt: OptimizerConfig | None = None,
    seed: int = 42,
) -> VqaResult:
    """March ``steps`` variational Euler steps from ``init``.

    The initial field is first loaded by :func:`fit_ansatz` (``fit_opt`` defaults to
    ``opt``); every step then warm-starts from the previous optimum and minimizes
    :func:`burgers_step_cost` against that frozen previous ansatz.
    A zero initial field is stationary and is returned without optimization.
    """
    spec = init.spec
    if 2**template.n_qubits != spec.N:
        raise ValueError(f"ansatz has {template.n_qubits} qubits, grid has {spec.N} points")
    if steps < 0:
        raise ValueError("steps must be >= 0")
    if not np.any(init.values):
        zero = template.with_params(theta=np.zeros(template.K), theta0=0.0)
        return VqaResult([init] * (steps + 1), [[0.0] for _ in range(steps + 1)], [zero] * (steps + 1))
    current, fit_history = fit_ansatz(init.values, template, fit_opt or opt, seed=seed)
    fields = [Field(spec, decode_ansatz(current))]
    histories, ansatze = [fit_history], [current]
    for _ in range(steps):
        cost = VqaCostSpec(nu, tau, spec, current, mode, shots)
        current, history = _run(current, cost, opt)
        fields.append(Field(spec, decode_ansatz(current)))
        histories.append(history)
        ansatze.append(current)
    return VqaResult(fields, histories, ansatze)
