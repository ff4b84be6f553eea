"""Dense and parameterized-quantum network layers with forward and reverse passes.

Layers are immutable values. ``forward`` returns the output together with a cache
that ``backward`` consumes to produce input and parameter gradients.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass
from functools import cached_property
from typing import Any

import numpy as np
from numpy.typing import NDArray

__all__ = [
    "Activation",
    "DenseLayer",
    "FeatureMap",
    "QuantumLayer",
    "cnot_ring",
]

Array = NDArray[np.float64]


def _readonly(a: Any) -> Array:
    out = np.array(a, dtype=np.float64)
    out.setflags(write=False)
    return out


class Activation(str, enum.Enum):
    TANH = "tanh"
    LINEAR = "linear"


@dataclass(frozen=True, eq=False)
class DenseLayer:
    """Affine map ``act(x @ W.T + b)`` with ``W`` shaped (out, in)."""

    weights: Array
    biases: Array
    activation: Activation = Activation.TANH

    def __post_init__(self) -> None:
        w, b = _readonly(self.weights), _readonly(self.biases)
        if w.ndim != 2 or b.shape != (w.shape[0],):
            raise ValueError(f"weights {w.shape} and biases {b.shape} do not form a dense layer")
        object.__setattr__(self, "weights", w)
        object.__setattr__(self, "biases", b)
        object.__setattr__(self, "activation", Activation(self.activation))

    @classmethod
    def glorot(cls, rng: np.random.Generator, n_in: int, n_out: int, activation: Activation | str = Activation.TANH) -> DenseLayer:
        """Weights uniform in ``±sqrt(6 / (in + out))``, zero biases."""
        limit = np.sqrt(6.0 / (n_in + n_out))
        return cls(rng.uniform(-limit, limit, (n_out, n_in)), np.zeros(n_out), activation)

    @property
    def n_in(self) -> int:
        return self.weights.shape[1]

    @property
    def n_out(self) -> int:
        return self.weights.shape[0]

    @property
    def n_params(self) -> int:
        return self.weights.size + self.biases.size

    @property
    def params(self) -> Array:
        return np.concatenate([self.weights.ravel(), self.biases])

    def with_params(self, flat: Array) -> DenseLayer:
        flat = np.asarray(flat, dtype=np.float64)
        if flat.shape != (self.n_params,):
            raise ValueError(f"dense layer needs {self.n_params} parameters, got {flat.shape}")
        nw = self.weights.size
        return DenseLayer(flat[:nw].reshape(self.weights.shape), flat[nw:], self.activation)

    def forward(self, x: Array) -> tuple[Array, Any]:
        z = x @ self.weights.T + self.biases
        y = np.tanh(z) if self.activation is Activation.TANH else z
        return y, (x, y)

    def backward(self, cache: Any, gy: Array) -> tuple[Array, Array]:
        x, y = cache
        gz = gy * (1.0 - y * y) if self.activation is Activation.TANH else gy
        gw = gz.T @ x
        gb = gz.sum(axis=0)
        return gz @ self.weights, np.concatenate([gw.ravel(), gb])

    def __call__(self, x: Array) -> Array:
        return self.forward(np.atleast_2d(x))[0]


class FeatureMap(str, enum.Enum):
    """Map from a classical input to a rotation angle."""

    IDENTITY = "identity"
    CHEBYSHEV = "chebyshev"
    """``2 n arccos(x)`` with the input clipped to [-1, 1]."""


def cnot_ring(n: int) -> list[tuple[int, int]]:
    """CNOT (control, target) pairs ``q -> q+1`` closed by ``n-1 -> 0`` when n > 2."""
    pairs = [(q, q + 1) for q in range(n - 1)]
    if n > 2:
        pairs.append((n - 1, 0))
    return pairs


def _permutation(n: int, pairs: list[tuple[int, int]]) -> NDArray[np.intp]:
    """Index map ``p`` such that ``new[:, i] = old[:, p[i]]`` for the CNOT sequence (qubit 0 = MSB)."""
    idx = np.arange(2**n)
    perm = idx.copy()
    for c, t in pairs:
        cbit, tbit = 1 << (n - 1 - c), 1 << (n - 1 - t)
        flip = np.where(idx & cbit, idx ^ tbit, idx)
        # a CNOT is an involution, so composing as a gather works in order
        perm = perm[flip]
    return perm


def _ry(state: Array, n: int, q: int, angle: Array | float) -> Array:
    """Apply ``RY(angle)`` to qubit ``q`` of a batch of real states shaped (B, 2**n)."""
    b = state.shape[0]
    st = state.reshape(b, 2**q, 2, 2 ** (n - q - 1))
    half = np.asarray(angle, dtype=np.float64) / 2.0
    c, s = np.cos(half), np.sin(half)
    if np.ndim(c):
        c, s = c[:, None, None], s[:, None, None]
    a0, a1 = st[:, :, 0, :], st[:, :, 1, :]
    out = np.empty_like(st)
    out[:, :, 0, :] = c * a0 - s * a1
    out[:, :, 1, :] = s * a0 + c * a1
    return out.reshape(b, -1)


def _product_state(phi: Array) -> Array:
    """``kron_q (cos(phi_q/2), sin(phi_q/2))`` for a batch of angle rows (B, n)."""
    b, n = phi.shape
    state = np.ones((b, 1))
    for q in range(n):
        f = np.stack([np.cos(phi[:, q] / 2), np.sin(phi[:, q] / 2)], axis=1)
        state = (state[:, :, None] * f[:, None, :]).reshape(b, -1)
    return state


def _z_signs(n: int) -> Array:
    """(2**n, n) table of Z eigenvalues, +1 for bit 0 and -1 for bit 1."""
    bits = (np.arange(2**n)[:, None] >> (n - 1 - np.arange(n))[None, :]) & 1
    return 1.0 - 2.0 * bits


@dataclass(frozen=True, eq=False)
class QuantumLayer:
    """Angle-encoded cascade circuit read out as per-qubit ``<Z>``.

    Input ``x_q`` becomes the angle of ``RY(phi(x_q))`` on qubit ``q``. Each of the
    ``sublayers`` blocks applies ``RY(theta)`` to every qubit and then a ring of CNOTs.
    With ``reupload`` the encoding is repeated in front of every block; otherwise it
    is applied once to ``|0...0>``.
    """

    theta: Array
    n_qubits: int = 5
    sublayers: int = 3
    feature_map: FeatureMap = FeatureMap.IDENTITY
    chebyshev_order: int = 1
    reupload: bool = False

    def __post_init__(self) -> None:
        if self.n_qubits < 1 or self.sublayers < 1:
            raise ValueError("a quantum layer needs at least one qubit and one sub-layer")
        if self.n_qubits > 12:
            raise ValueError(f"{self.n_qubits} qubits exceeds the dense simulation guard of 12")
        theta = _readonly(self.theta)
        if theta.shape != (self.n_qubits * self.sublayers,):
            raise ValueError(f"quantum layer needs {self.n_qubits * self.sublayers} angles, got {theta.shape}")
        object.__setattr__(self, "theta", theta)
        object.__setattr__(self, "feature_map", FeatureMap(self.feature_map))

    @classmethod
    def random(cls, rng: np.random.Generator, n_qubits: int = 5, sublayers: int = 3, scale: float = 0.1, **kwargs: Any) -> QuantumLayer:
        return cls(rng.uniform(-scale, scale, n_qubits * sublayers), n_qubits, sublayers, **kwargs)

    @property
    def n_in(self) -> int:
        return self.n_qubits

    @property
    def n_out(self) -> int:
        return self.n_qubits

    @property
    def n_params(self) -> int:
        return self.theta.size

    @property
    def params(self) -> Array:
        return self.theta.copy()

    def with_params(self, flat: Array) -> QuantumLayer:
        return QuantumLayer(flat, self.n_qubits, self.sublayers, self.feature_map, self.chebyshev_order, self.reupload)

    # -- encoding ---------------------------------------------------------------

    def encode(self, x: Array) -> Array:
        if self.feature_map is FeatureMap.IDENTITY:
            return np.asarray(x, dtype=np.float64)
        return 2.0 * self.chebyshev_order * np.arccos(np.clip(x, -1.0, 1.0))

    def encode_derivative(self, x: Array) -> Array:
        if self.feature_map is FeatureMap.IDENTITY:
            return np.ones_like(x)
        inside = np.abs(x) < 1.0
        safe = np.where(inside, x, 0.0)
        return np.where(inside, -2.0 * self.chebyshev_order / np.sqrt(1.0 - safe * safe), 0.0)

    # -- circuit ----------------------------------------------------------------

    @cached_property
    def _ring(self) -> NDArray[np.intp]:
        return _permutation(self.n_qubits, cnot_ring(self.n_qubits))

    @cached_property
    def _tangents(self) -> Array:
        """(D, n*D) map with ``(psi @ M)[:, k*D:(k+1)*D] = J_k psi``, ``J = [[0, -1], [1, 0]]`` on qubit k."""
        n, d = self.n_qubits, 2**self.n_qubits
        m = np.zeros((d, n * d))
        idx = np.arange(d)
        for k in range(n):
            bit = 1 << (n - 1 - k)
            m[idx ^ bit, k * d + idx] = np.where(idx & bit, 1.0, -1.0)
        return m

    @cached_property
    def _signs(self) -> Array:
        return _z_signs(self.n_qubits)

    def _block(self, state: Array, theta: Array, s: int) -> Array:
        n = self.n_qubits
        for q in range(n):
            state = _ry(state, n, q, theta[s * n + q])
        return state[:, self._ring]

    def simulate(self, phi: Array, theta: Array | None = None, encode_shift: tuple[int, int, float] | None = None) -> Array:
        """Gate-by-gate state vectors for encoded angles ``phi`` (B, n).

        ``encode_shift = (sublayer, qubit, delta)`` offsets one encoding rotation,
        which is how input derivatives are taken on the reupload path.
        """
        theta = self.theta if theta is None else theta
        n = self.n_qubits
        b = phi.shape[0]
        state = np.zeros((b, 2**n))
        state[:, 0] = 1.0
        for s in range(self.sublayers):
            if s == 0 or self.reupload:
                for q in range(n):
                    angle = phi[:, q]
                    if encode_shift is not None and encode_shift[:2] == (s, q):
                        angle = angle + encode_shift[2]
                    state = _ry(state, n, q, angle)
            state = self._block(state, theta, s)
        return state

    def _expect(self, state: Array) -> Array:
        return (state * state) @ self._signs

    def variational_matrix(self, theta: Array | None = None) -> Array:
        """Real unitary ``V`` of the blocks without encoding, (2**n, 2**n)."""
        theta = self.theta if theta is None else theta
        n = self.n_qubits
        ring = np.eye(2**n)[self._ring]
        v = np.eye(2**n)
        for s in range(self.sublayers):
            half = np.asarray(theta[s * n : (s + 1) * n]) / 2
            c, sn = np.cos(half), np.sin(half)
            k = np.ones((1, 1))
            for q in range(n):
                g = np.array([[c[q], -sn[q]], [sn[q], c[q]]])
                k = (k[:, None, :, None] * g[None, :, None, :]).reshape(2 * k.shape[0], -1)
            v = ring @ (k @ v)
        return v

    def observables(self, theta: Array | None = None) -> Array:
        """``A_q = V^T Z_q V`` for the variational part ``V`` (no reupload), shape (n, D, D)."""
        v = self.variational_matrix(theta)
        return np.matmul(v.T[None, :, :], self._signs.T[:, :, None] * v[None, :, :])

    @cached_property
    def _observables(self) -> Array:
        return self.observables()

    def forward(self, x: Array) -> tuple[Array, Any]:
        x = np.asarray(x, dtype=np.float64)
        if x.ndim != 2 or x.shape[1] != self.n_qubits:
            raise ValueError(f"quantum layer expects inputs of width {self.n_qubits}, got {x.shape}")
        phi = self.encode(x)
        if self.reupload:
            return self._expect(self.simulate(phi)), (x, phi, None, None)
        psi = _product_state(phi)
        a_psi = np.tensordot(psi, self._observables, axes=([1], [2]))  # A_q symmetric
        return np.sum(a_psi * psi[:, None, :], axis=2), (x, phi, psi, a_psi)

    def __call__(self, x: Array) -> Array:
        return self.forward(np.atleast_2d(x))[0]

    def backward(self, cache: Any, gy: Array) -> tuple[Array, Array]:
        """Input gradient and parameter-shift gradient of ``sum(gy * outputs)``."""
        x, phi, psi, a_psi = cache
        if self.reupload:
            gphi, gtheta = self._backward_shift(phi, gy)
        else:
            gphi, gtheta = self._backward_product(psi, a_psi, gy)
        return gphi * self.encode_derivative(x), gtheta

    def _backward_product(self, psi: Array, a_psi: Array, gy: Array) -> tuple[Array, Array]:
        n = self.n_qubits
        b = psi.shape[0]
        # d<Z_q>/dphi_k = 2 (A_q psi) . (d psi / d phi_k), d psi/d phi_k = J_k psi / 2, J = [[0,-1],[1,0]]
        w = np.einsum("bq,bqi->bi", gy, a_psi)
        d = psi.shape[1]
        gphi = np.einsum("bki,bi->bk", (psi @ self._tangents).reshape(b, n, d), w)
        # sum_b gy_bq psi_b^T A_q psi_b = <A_q, R_q> with R_q = sum_b gy_bq psi_b psi_b^T
        r = ((gy[:, :, None] * psi[:, None, :]).reshape(b, n * d).T @ psi).reshape(n, d, d)
        gtheta = np.empty(self.n_params)
        for j in range(self.n_params):
            plus, minus = self.theta.copy(), self.theta.copy()
            plus[j] += np.pi / 2
            minus[j] -= np.pi / 2
            gtheta[j] = 0.5 * (np.sum(self.observables(plus) * r) - np.sum(self.observables(minus) * r))
        return gphi, gtheta

    def _backward_shift(self, phi: Array, gy: Array) -> tuple[Array, Array]:
        n = self.n_qubits
        gtheta = np.empty(self.n_params)
        for j in range(self.n_params):
            plus, minus = self.theta.copy(), self.theta.copy()
            plus[j] += np.pi / 2
            minus[j] -= np.pi / 2
            diff = self._expect(self.simulate(phi, plus)) - self._expect(self.simulate(phi, minus))
            gtheta[j] = 0.5 * np.sum(gy * diff)
        gphi = np.zeros_like(phi)
        for s in range(self.sublayers):
            for q in range(n):
                diff = self._expect(self.simulate(phi, encode_shift=(s, q, np.pi / 2))) - self._expect(
                    self.simulate(phi, encode_shift=(s, q, -np.pi / 2))
                )
                gphi[:, q] += 0.5 * np.sum(gy * diff, axis=1)
        return gphi, gtheta
