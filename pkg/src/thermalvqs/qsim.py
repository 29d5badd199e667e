"""Dense statevector simulation for small qubit registers.

Conventions used throughout the package:

* Qubit ``i`` is bit ``i`` of the integer basis index, so the bitstring
  ``x = x_0 x_1 ... x_{N-1}`` (leftmost character is qubit 0) labels basis
  index ``sum_i int(x_i) * 2**i``.
* ``|0>`` is the ``sigma_z = +1`` eigenstate.
* ``apply_rz`` multiplies the ``|0>`` amplitude by ``exp(-i theta/2)`` and the
  ``|1>`` amplitude by ``exp(+i theta/2)``.

Everything here is exact dense linear algebra on ``2**n`` complex amplitudes.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .errors import ValidationError

PAULI = {
    "I": np.eye(2, dtype=complex),
    "X": np.array([[0, 1], [1, 0]], dtype=complex),
    "Y": np.array([[0, -1j], [1j, 0]], dtype=complex),
    "Z": np.array([[1, 0], [0, -1]], dtype=complex),
}

_NORM_DRIFT_TOL = 1e-6


def bits_to_index(bits: str) -> int:
    """Basis index of a bitstring, qubit i being bit i of the index."""
    return int(bits[::-1], 2)


def index_to_bits(index: int, n_qubits: int) -> str:
    return format(index, f"0{n_qubits}b")[::-1]


@lru_cache(maxsize=None)
def bit_table(n_qubits: int) -> np.ndarray:
    """(2**n, n) array whose row m holds the bits of basis index m."""
    idx = np.arange(2**n_qubits)
    return ((idx[:, None] >> np.arange(n_qubits)[None, :]) & 1).astype(np.float64)


@dataclass
class StateVector:
    """Complex amplitudes over the computational basis of ``n_qubits`` qubits."""

    n_qubits: int
    amps: np.ndarray

    def __post_init__(self):
        self.amps = np.asarray(self.amps, dtype=complex)
        if self.amps.shape != (2**self.n_qubits,):
            raise ValueError(
                f"expected {2**self.n_qubits} amplitudes, got shape {self.amps.shape}"
            )

    def norm(self) -> float:
        return float(np.linalg.norm(self.amps))

    def probabilities(self) -> np.ndarray:
        return np.abs(self.amps) ** 2

    def copy(self) -> "StateVector":
        return StateVector(self.n_qubits, self.amps.copy())


@dataclass(frozen=True)
class PauliString:
    """Product of single-qubit Pauli factors times a real coefficient.

    ``factors`` is a tuple of ``(qubit, axis)`` pairs with distinct qubits and
    axis in ``{"X", "Y", "Z"}``. An empty tuple is the identity.
    """

    factors: tuple[tuple[int, str], ...]
    coefficient: float = 1.0

    def __post_init__(self):
        object.__setattr__(self, "factors", tuple((int(q), a) for q, a in self.factors))
        qubits = [q for q, _ in self.factors]
        if len(set(qubits)) != len(qubits):
            raise ValueError(f"repeated qubit in Pauli factors {self.factors}")
        for q, a in self.factors:
            if q < 0:
                raise ValueError(f"negative qubit index {q}")
            if a not in ("X", "Y", "Z"):
                raise ValueError(f"unknown Pauli axis {a!r}")

    def max_qubit(self) -> int:
        return max((q for q, _ in self.factors), default=-1)


def basis_state(n_qubits: int, bits: str) -> StateVector:
    """Computational basis state for a bitstring.

    >>> basis_state(2, "10").amps.nonzero()[0]
    array([1])
    """
    if len(bits) != n_qubits or set(bits) - {"0", "1"}:
        raise ValueError(f"need {n_qubits} characters of 0/1, got {bits!r}")
    amps = np.zeros(2**n_qubits, dtype=complex)
    amps[bits_to_index(bits)] = 1.0
    return StateVector(n_qubits, amps)


def apply_rz(state: StateVector, qubit: int, theta: float) -> StateVector:
    """Single-qubit z rotation, diag(exp(-i theta/2), exp(+i theta/2))."""
    if not 0 <= qubit < state.n_qubits:
        raise ValueError(f"qubit {qubit} out of range for {state.n_qubits} qubits")
    b = (np.arange(2**state.n_qubits) >> qubit) & 1
    phase = np.exp(1j * theta * (b - 0.5))
    return StateVector(state.n_qubits, state.amps * phase)


def apply_1q(state: StateVector, qubit: int, gate: np.ndarray) -> StateVector:
    """Apply an arbitrary 2x2 gate to one qubit."""
    if not 0 <= qubit < state.n_qubits:
        raise ValueError(f"qubit {qubit} out of range for {state.n_qubits} qubits")
    gate = np.asarray(gate, dtype=complex)
    if gate.shape != (2, 2):
        raise ValueError(f"gate must be 2x2, got {gate.shape}")
    # Reshape so the target qubit is the middle axis; qubit i has stride 2**i.
    low, high = 2**qubit, 2 ** (state.n_qubits - qubit - 1)
    a = state.amps.reshape(high, 2, low)
    out = np.einsum("ab,hbl->hal", gate, a)
    return StateVector(state.n_qubits, out.reshape(-1))


def apply_pauli(state: StateVector, pauli: PauliString) -> StateVector:
    """Apply ``coefficient * product of Pauli factors`` to a state."""
    n = state.n_qubits
    if pauli.max_qubit() >= n:
        raise ValueError(f"Pauli factor beyond qubit {n - 1}")
    flip = 0
    for q, a in pauli.factors:
        if a in ("X", "Y"):
            flip |= 1 << q
    idx = np.arange(2**n)
    src = idx ^ flip
    out = state.amps[src] * pauli.coefficient
    for q, a in pauli.factors:
        b = (src >> q) & 1
        if a == "Z":
            out *= 1.0 - 2.0 * b
        elif a == "Y":
            out *= np.where(b, -1j, 1j)
    return StateVector(n, out)


def expect_pauli(state: StateVector, pauli: PauliString) -> float:
    """Expectation value of a Hermitian Pauli string (real part returned)."""
    return float(np.real(np.vdot(state.amps, apply_pauli(state, pauli).amps)))


def expect_pauli_sum(state: StateVector, terms: list[PauliString]) -> float:
    return sum(expect_pauli(state, t) for t in terms)


def dense_matrix(terms: list[PauliString], n_qubits: int) -> np.ndarray:
    """Dense ``2**n x 2**n`` matrix of a Pauli-string sum."""
    dim = 2**n_qubits
    for t in terms:
        if t.max_qubit() >= n_qubits:
            raise ValueError(f"Pauli factor beyond qubit {n_qubits - 1}")
    h = np.zeros((dim, dim), dtype=complex)
    idx = np.arange(dim)
    for t in terms:
        flip = 0
        for q, a in t.factors:
            if a in ("X", "Y"):
                flip |= 1 << q
        val = np.full(dim, t.coefficient, dtype=complex)
        for q, a in t.factors:
            b = (idx >> q) & 1
            if a == "Z":
                val *= 1.0 - 2.0 * b
            elif a == "Y":
                val *= np.where(b, -1j, 1j)
        # One entry per column within a term, so plain fancy indexing accumulates
        # correctly across terms.
        h[idx ^ flip, idx] += val
    return h


def apply_hermitian_evolution(
    state: StateVector, terms: list[PauliString], t: float
) -> StateVector:
    """Evolve a state by ``exp(-i H t)`` for ``H`` given as a Pauli-string sum.

    Exact via dense diagonalization, so the cost is ``O(8**n)`` per call;
    callers that reuse the same generator should cache the propagator instead.
    """
    h = dense_matrix(terms, state.n_qubits)
    if not np.allclose(h, h.conj().T, atol=1e-12):
        raise ValueError("generator is not Hermitian")
    w, v = np.linalg.eigh(h)
    amps = v @ (np.exp(-1j * t * w) * (v.conj().T @ state.amps))
    return StateVector(state.n_qubits, amps)


def sample_indices(state: StateVector, shots: int, rng: np.random.Generator) -> np.ndarray:
    """Sample basis indices from the Born distribution of a normalized state."""
    if shots < 1:
        raise ValueError("shots must be positive")
    p = state.probabilities()
    total = p.sum()
    if abs(total - 1.0) > _NORM_DRIFT_TOL:
        raise ValidationError(f"state norm drifted beyond tolerance: sum(p) = {total}")
    return rng.choice(p.size, size=shots, p=p / total)


def sample_bits(state: StateVector, shots: int, rng: np.random.Generator) -> list[str]:
    """Sample measurement bitstrings in the computational basis."""
    n = state.n_qubits
    return [index_to_bits(int(m), n) for m in sample_indices(state, shots, rng)]
