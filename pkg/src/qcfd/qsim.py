"""Exact statevector simulation with seeded shot sampling.

Qubit 0 is the most significant bit of the basis index, the same big-endian
convention as the tensor-train code, so amplitude ``j`` of an ``n``-qubit state
corresponds to grid point ``j`` of a ``2**n`` field.
"""

from __future__ import annotations

import csv
import enum
import itertools
import os
from dataclasses import dataclass, field, replace
from typing import Sequence, Union

import numpy as np
from numpy.typing import NDArray

__all__ = [
    "DENSE_QUBIT_GUARD",
    "DECOMPOSE_QUBIT_GUARD",
    "Gate",
    "GateKind",
    "PauliDecomposition",
    "PauliTerm",
    "ShotConfig",
    "StateVector",
    "amplitude_encode",
    "apply_circuit",
    "apply_pauli",
    "circuit_unitary",
    "dump_amplitudes",
    "expectation",
    "hadamard_test",
    "pauli_decompose",
    "pauli_matrix",
]

DENSE_QUBIT_GUARD = 12
DECOMPOSE_QUBIT_GUARD = 6

CArray = NDArray[np.complex128]

_PAULI = {
    "I": np.eye(2, dtype=complex),
    "X": np.array([[0, 1], [1, 0]], dtype=complex),
    "Y": np.array([[0, -1j], [1j, 0]], dtype=complex),
    "Z": np.array([[1, 0], [0, -1]], dtype=complex),
}
_LETTERS = "IXYZ"
_PAULI_STACK = np.stack([_PAULI[c] for c in _LETTERS])  # (4, 2, 2)
_H = np.array([[1, 1], [1, -1]], dtype=complex) / np.sqrt(2.0)


# -- states -------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class StateVector:
    """Complex amplitudes over ``n_qubits`` (stored read-only)."""

    n_qubits: int
    amplitudes: CArray

    def __post_init__(self) -> None:
        if not 1 <= self.n_qubits <= DENSE_QUBIT_GUARD:
            raise ValueError(f"n_qubits must lie in [1, {DENSE_QUBIT_GUARD}], got {self.n_qubits}")
        amps = np.array(self.amplitudes, dtype=np.complex128)
        if amps.shape != (2**self.n_qubits,):
            raise ValueError(f"expected {2**self.n_qubits} amplitudes, got shape {amps.shape}")
        amps.setflags(write=False)
        object.__setattr__(self, "amplitudes", amps)

    @classmethod
    def zero(cls, n_qubits: int) -> StateVector:
        amps = np.zeros(2**n_qubits, dtype=complex)
        amps[0] = 1.0
        return cls(n_qubits, amps)

    def norm(self) -> float:
        return float(np.linalg.norm(self.amplitudes))

    def probabilities(self) -> NDArray[np.float64]:
        return np.abs(self.amplitudes) ** 2

    def inner(self, other: StateVector) -> complex:
        """``<self|other>``."""
        return complex(np.vdot(self.amplitudes, other.amplitudes))


def dump_amplitudes(state: StateVector, path: str | os.PathLike) -> None:
    """Debug dump as CSV with columns ``index,re,im``."""
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["index", "re", "im"])
        for j, a in enumerate(state.amplitudes):
            writer.writerow([j, f"{a.real:.17g}", f"{a.imag:.17g}"])


def amplitude_encode(v: Sequence[float] | NDArray[np.float64]) -> tuple[StateVector, float]:
    """Normalize a real vector of length ``2**n`` into a state; also return its norm."""
    v = np.asarray(v, dtype=np.float64)
    n = int(v.size).bit_length() - 1
    if v.ndim != 1 or n < 1 or 2**n != v.size:
        raise ValueError(f"length {v.size} is not a power of two >= 2")
    norm = float(np.linalg.norm(v))
    if norm == 0.0:
        raise ValueError("cannot amplitude-encode the zero vector")
    return StateVector(n, v / norm), norm


# -- gates --------------------------------------------------------------------------


class GateKind(str, enum.Enum):
    RX = "rx"
    RY = "ry"
    RZ = "rz"
    H = "h"
    X = "x"
    CNOT = "cnot"
    CONTROLLED_UNITARY = "cu"
    PAULI_STRING = "pauli"


_ROTATION_GENERATOR = {GateKind.RX: "X", GateKind.RY: "Y", GateKind.RZ: "Z"}


@dataclass(frozen=True, eq=False)
class Gate:
    """A gate acting on ``wires``.

    Rotations are ``exp(-i theta G / 2)`` with ``G`` in {X, Y, Z}. ``CNOT`` takes
    ``(control, target)``. ``CONTROLLED_UNITARY`` takes ``(control, *targets)`` and a
    ``2**k x 2**k`` unitary ``matrix``. ``PAULI_STRING`` applies ``pauli`` (one letter
    per listed wire). Use the classmethod constructors rather than the raw fields.
    """

    kind: GateKind
    wires: tuple[int, ...]
    theta: float | None = None
    matrix: CArray | None = None
    pauli: str | None = None

    @classmethod
    def rx(cls, wire: int, theta: float) -> Gate:
        return cls(GateKind.RX, (wire,), float(theta))

    @classmethod
    def ry(cls, wire: int, theta: float) -> Gate:
        return cls(GateKind.RY, (wire,), float(theta))

    @classmethod
    def rz(cls, wire: int, theta: float) -> Gate:
        return cls(GateKind.RZ, (wire,), float(theta))

    @classmethod
    def h(cls, wire: int) -> Gate:
        return cls(GateKind.H, (wire,))

    @classmethod
    def x(cls, wire: int) -> Gate:
        return cls(GateKind.X, (wire,))

    @classmethod
    def cnot(cls, control: int, target: int) -> Gate:
        if control == target:
            raise ValueError("CNOT control and target must differ")
        return cls(GateKind.CNOT, (control, target))

    @classmethod
    def controlled(cls, control: int, targets: Sequence[int], matrix: CArray) -> Gate:
        matrix = np.asarray(matrix, dtype=complex)
        k = len(targets)
        if matrix.shape != (2**k, 2**k):
            raise ValueError(f"matrix must be {2**k}x{2**k} for {k} target wires")
        if not np.allclose(matrix.conj().T @ matrix, np.eye(2**k), atol=1e-10):
            raise ValueError("controlled matrix is not unitary")
        if control in targets:
            raise ValueError("control wire cannot also be a target")
        return cls(GateKind.CONTROLLED_UNITARY, (control, *targets), matrix=matrix)

    @classmethod
    def pauli_string(cls, word: str, wires: Sequence[int] | None = None) -> Gate:
        word = word.upper()
        if any(c not in _PAULI for c in word):
            raise ValueError(f"invalid Pauli word {word!r}")
        wires = tuple(range(len(word))) if wires is None else tuple(wires)
        if len(wires) != len(word):
            raise ValueError("one wire per Pauli letter required")
        return cls(GateKind.PAULI_STRING, wires, pauli=word)

    @property
    def is_parametric(self) -> bool:
        return self.kind in _ROTATION_GENERATOR

    @property
    def generator(self) -> str:
        """Pauli generator letter of a rotation gate."""
        if not self.is_parametric:
            raise ValueError(f"{self.kind.value} gate has no rotation generator")
        return _ROTATION_GENERATOR[self.kind]

    def with_theta(self, theta: float) -> Gate:
        if not self.is_parametric:
            raise ValueError(f"{self.kind.value} gate has no angle")
        return replace(self, theta=float(theta))

    def unitary(self) -> CArray:
        """Matrix on ``wires`` (first listed wire most significant)."""
        k = self.kind
        if k in _ROTATION_GENERATOR:
            c, s = np.cos(self.theta / 2), np.sin(self.theta / 2)
            return c * _PAULI["I"] - 1j * s * _PAULI[_ROTATION_GENERATOR[k]]
        if k is GateKind.H:
            return _H
        if k is GateKind.X:
            return _PAULI["X"]
        if k is GateKind.CNOT:
            return _controlled_matrix(_PAULI["X"])
        if k is GateKind.CONTROLLED_UNITARY:
            return _controlled_matrix(self.matrix)
        out = np.ones((1, 1), dtype=complex)
        for c in self.pauli:
            out = np.kron(out, _PAULI[c])
        return out


def _controlled_matrix(u: CArray) -> CArray:
    d = u.shape[0]
    out = np.eye(2 * d, dtype=complex)
    out[d:, d:] = u
    return out


def _ry_real(theta: float) -> NDArray[np.float64]:
    c, s = np.cos(theta / 2), np.sin(theta / 2)
    return np.array([[c, -s], [s, c]])


def _apply_matrix(psi: CArray, n: int, wires: tuple[int, ...], u: CArray) -> CArray:
    k = len(wires)
    tensor = psi.reshape((2,) * n)
    ut = u.reshape((2,) * (2 * k))
    out = np.tensordot(ut, tensor, axes=(list(range(k, 2 * k)), list(wires)))
    # tensordot puts the gate's output axes first; move them back into place
    return np.moveaxis(out, list(range(k)), list(wires)).reshape(-1)


def _apply_gate(psi: CArray, n: int, gate: Gate) -> CArray:
    if gate.kind is GateKind.CNOT:
        control, target = gate.wires
        tensor = psi.reshape((2,) * n).copy()
        index = [slice(None)] * n
        index[control] = 1
        sub = tensor[tuple(index)]
        axis = target - (target > control)
        tensor[tuple(index)] = np.flip(sub, axis=axis)
        return tensor.reshape(-1)
    if gate.kind is GateKind.PAULI_STRING:
        for wire, c in zip(gate.wires, gate.pauli):
            if c != "I":
                psi = _apply_matrix(psi, n, (wire,), _PAULI[c])
        return psi
    return _apply_matrix(psi, n, gate.wires, gate.unitary())


def _check_wires(gate: Gate, n: int) -> None:
    if any(not 0 <= w < n for w in gate.wires):
        raise ValueError(f"{gate.kind.value} gate wires {gate.wires} out of range for {n} qubits")
    if len(set(gate.wires)) != len(gate.wires):
        raise ValueError(f"{gate.kind.value} gate wires {gate.wires} repeat")


def apply_circuit(state: StateVector, circuit: Sequence[Gate]) -> StateVector:
    """Apply gates in order and return a new state."""
    n = state.n_qubits
    psi = np.array(state.amplitudes)
    for gate in circuit:
        _check_wires(gate, n)
        psi = _apply_gate(psi, n, gate)
    return StateVector(n, psi)


def circuit_unitary(circuit: Sequence[Gate], n_qubits: int) -> CArray:
    """Dense unitary of a circuit (columns are images of basis states)."""
    dim = 2**n_qubits
    cols = []
    for j in range(dim):
        basis = np.zeros(dim, dtype=complex)
        basis[j] = 1.0
        cols.append(apply_circuit(StateVector(n_qubits, basis), circuit).amplitudes)
    return np.stack(cols, axis=1)


# -- Pauli decomposition ------------------------------------------------------------


@dataclass(frozen=True)
class PauliTerm:
    coeff: complex
    word: str


@dataclass(frozen=True)
class PauliDecomposition:
    """``M = sum_j c_j p_j`` over Pauli words of a fixed length."""

    n_qubits: int
    terms: tuple[PauliTerm, ...] = field(default_factory=tuple)

    def __post_init__(self) -> None:
        for t in self.terms:
            if len(t.word) != self.n_qubits or any(c not in _PAULI for c in t.word):
                raise ValueError(f"invalid Pauli word {t.word!r} for {self.n_qubits} qubits")

    @classmethod
    def from_terms(cls, terms: Sequence[tuple[complex, str]]) -> PauliDecomposition:
        terms = tuple(PauliTerm(complex(c), w.upper()) for c, w in terms)
        if not terms:
            raise ValueError("need at least one term to infer the width")
        return cls(len(terms[0].word), terms)

    def to_matrix(self) -> CArray:
        dim = 2**self.n_qubits
        out = np.zeros((dim, dim), dtype=complex)
        for t in self.terms:
            out += t.coeff * pauli_matrix(t.word)
        return out

    def as_dict(self) -> dict[str, complex]:
        return {t.word: t.coeff for t in self.terms}


def pauli_matrix(word: str) -> CArray:
    out = np.ones((1, 1), dtype=complex)
    for c in word.upper():
        out = np.kron(out, _PAULI[c])
    return out


def pauli_decompose(m: CArray, tol: float = 1e-12) -> PauliDecomposition:
    """Project onto Pauli strings: ``c_j = Tr(p_j^dagger m) / 2**n``.

    The projection runs qubit by qubit on the ``(2,) * 2n`` reshaped matrix, so the
    cost is ``O(n 4**n)`` rather than one trace per string. Terms with
    ``|c_j| <= tol`` are dropped; an all-zero input keeps a single zero identity term.
    """
    m = np.asarray(m, dtype=complex)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {m.shape}")
    n = int(m.shape[0]).bit_length() - 1
    if n < 1 or 2**n != m.shape[0]:
        raise ValueError(f"matrix size {m.shape[0]} is not a power of two >= 2")
    if n > DECOMPOSE_QUBIT_GUARD:
        raise ValueError(f"refusing to decompose {n} qubits (guard {DECOMPOSE_QUBIT_GUARD})")
    # axes (r_0..r_{n-1}, c_0..c_{n-1}) -> interleave to (r_0, c_0, r_1, c_1, ...)
    t = m.reshape((2,) * (2 * n))
    t = t.transpose([ax for q in range(n) for ax in (q, n + q)])
    for _ in range(n):
        # contract the leading (r, c) pair into one Pauli index and rotate it to the back
        t = np.tensordot(_PAULI_STACK.conj(), t, axes=([1, 2], [0, 1]))
        t = np.moveaxis(t, 0, -1)
    coeffs = t.reshape(-1) / 2**n
    terms = [
        PauliTerm(complex(c), "".join(w))
        for c, w in zip(coeffs, itertools.product(_LETTERS, repeat=n))
        if abs(c) > tol
    ]
    if not terms:
        terms = [PauliTerm(0j, "I" * n)]
    return PauliDecomposition(n, tuple(terms))


def apply_pauli(state: StateVector, word: str) -> StateVector:
    return apply_circuit(state, [Gate.pauli_string(word)])


# -- measurement --------------------------------------------------------------------


@dataclass(frozen=True)
class ShotConfig:
    """Shot budget ``shots`` and a 64-bit ``seed``.

    Term ``j`` of a decomposition draws from ``SeedSequence([seed, j])``, so terms can
    be sampled independently and in any order with identical results.
    """

    shots: int
    seed: int = 0

    def __post_init__(self) -> None:
        if int(self.shots) < 1:
            raise ValueError(f"shots must be >= 1, got {self.shots}")
        if not 0 <= int(self.seed) < 2**64:
            raise ValueError("seed must be a 64-bit unsigned integer")

    def rng(self, term_index: int, *extra: int) -> np.random.Generator:
        entropy = [int(self.seed), int(term_index), *map(int, extra)]
        return np.random.default_rng(np.random.SeedSequence(entropy))


def _sample_pm1_mean(rng: np.random.Generator, mean: float, shots: int) -> float:
    """Average of ``shots`` draws of a +-1 outcome whose exact mean is ``mean``."""
    p_plus = min(1.0, max(0.0, 0.5 * (1.0 + mean)))
    k = rng.binomial(shots, p_plus)
    return (2.0 * k - shots) / shots


def _pauli_expectations(state: StateVector, obs: PauliDecomposition) -> NDArray[np.float64]:
    out = []
    for t in obs.terms:
        val = state.inner(apply_pauli(state, t.word))
        out.append(val.real)
    return np.array(out)


def expectation(state: StateVector, obs: PauliDecomposition, shots: ShotConfig | None = None) -> float:
    """``<psi|A|psi>`` for Hermitian ``A`` given as a Pauli decomposition.

    Exact mode sums the term expectations. Sampled mode draws ``shots.shots``
    +-1 outcomes per non-identity term from the exact outcome distribution (a
    measurement in the eigenbasis of that Pauli string) and averages them; identity
    terms contribute their coefficient exactly.
    """
    if obs.n_qubits != state.n_qubits:
        raise ValueError(f"observable acts on {obs.n_qubits} qubits, state has {state.n_qubits}")
    coeffs = np.array([t.coeff for t in obs.terms])
    if np.max(np.abs(coeffs.imag), initial=0.0) > 1e-12:
        raise ValueError("observable is not Hermitian (complex Pauli coefficients)")
    exact = _pauli_expectations(state, obs)
    if shots is None:
        return float(coeffs.real @ exact)
    total = 0.0
    for j, (t, mean) in enumerate(zip(obs.terms, exact)):
        if set(t.word) == {"I"}:
            total += t.coeff.real
        else:
            total += t.coeff.real * _sample_pm1_mean(shots.rng(j), mean, shots.shots)
    return float(total)


# -- Hadamard test ------------------------------------------------------------------

Preparation = Union[Sequence[Gate], StateVector]


def _prepare(prep: Preparation, n: int) -> StateVector:
    if isinstance(prep, StateVector):
        if prep.n_qubits != n:
            raise ValueError(f"prepared state has {prep.n_qubits} qubits, expected {n}")
        return prep
    return apply_circuit(StateVector.zero(n), prep)


def _ancilla_zero_probability(a: StateVector, pb: StateVector, imag: bool) -> float:
    """P(ancilla = 0) of the Hadamard-test circuit.

    The ancilla (qubit 0) starts in |+>; controlled on 0 the register is prepared by
    ``A`` and controlled on 1 by ``p B``. For the imaginary part an ``S^dagger`` is
    applied to the ancilla before the closing Hadamard.
    """
    n = a.n_qubits
    joint = np.concatenate([a.amplitudes, pb.amplitudes]) / np.sqrt(2.0)
    circuit = [Gate.rz(0, -np.pi / 2)] if imag else []  # S^dagger up to global phase
    circuit.append(Gate.h(0))
    out = apply_circuit(StateVector(n + 1, joint), circuit)
    return float(np.sum(out.probabilities()[: 2**n]))


def hadamard_test(
    prep_a: Preparation,
    prep_b: Preparation,
    op: PauliDecomposition,
    mode: str | ShotConfig = "exact",
    *,
    part: str = "real",
) -> float:
    """Estimate ``Re <0|A^dagger M B|0>`` (or ``Im`` with ``part="imag"``).

    ``M = sum_j c_j p_j`` is handled term by term: each unitary ``p_j`` gives one
    Hadamard-test overlap ``<a|p_j|b>``, and the classical coefficients combine them.
    Real and imaginary overlap parts are both needed when ``c_j`` is complex.

    In sampled mode the shot budget is split evenly over the (term, part) circuits
    that actually contribute; each circuit measures only the ancilla and draws from
    ``SeedSequence([seed, term, is_imag])``.
    """
    if part not in ("real", "imag"):
        raise ValueError(f"part must be 'real' or 'imag', got {part!r}")
    n = op.n_qubits
    a, b = _prepare(prep_a, n), _prepare(prep_b, n)
    want_imag = part == "imag"
    # value = Re/Im of sum_j c_j z_j with z_j = <a|p_j|b>:
    #   Re: Re(c) Re(z) - Im(c) Im(z);  Im: Re(c) Im(z) + Im(c) Re(z)
    jobs: list[tuple[int, bool, float]] = []  # (term, measure imag part, weight)
    for j, t in enumerate(op.terms):
        c = t.coeff
        w_re, w_im = (c.imag, c.real) if want_imag else (c.real, -c.imag)
        if w_re != 0.0:
            jobs.append((j, False, w_re))
        if w_im != 0.0:
            jobs.append((j, True, w_im))
    if not jobs:
        return 0.0
    if mode == "exact":
        total = 0.0
        for j, imag, w in jobs:
            z = a.inner(apply_pauli(b, op.terms[j].word))
            total += w * (z.imag if imag else z.real)
        return float(total)
    if not isinstance(mode, ShotConfig):
        raise ValueError(f"mode must be 'exact' or a ShotConfig, got {mode!r}")
    base, extra = divmod(mode.shots, len(jobs))
    total = 0.0
    for slot, (j, imag, w) in enumerate(jobs):
        shots = base + (1 if slot < extra else 0)
        if shots == 0:
            raise ValueError(f"{mode.shots} shots cannot cover {len(jobs)} Hadamard-test circuits")
        p0 = _ancilla_zero_probability(a, apply_pauli(b, op.terms[j].word), imag)
        estimate = _sample_pm1_mean(mode.rng(j, int(imag)), 2.0 * p0 - 1.0, shots)
        total += w * estimate
    return float(total)
