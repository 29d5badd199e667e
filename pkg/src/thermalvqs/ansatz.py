"""Layered variational circuit: z rotations alternating with a fixed entangler.

The entangler is ``exp(-i H0 tau)`` for the hopping generator

    H0 = sum_i g_{i,i+1} (s+_i s-_{i+1} + s-_i s+_{i+1})  [+ optional i,i+2 pairs]

which conserves the excitation number (Hamming weight of the bitstring). A
circuit layer applies the entangler and then one z rotation per qubit, so the
circuit both starts by entangling the basis-state input (a rotation there would
only contribute a global phase) and ends with a live rotation sublayer. With a
basis-state input the whole evolution stays inside one fixed-weight sector, and
most of this module exploits that by working in sector coordinates.

Two evaluation routes coexist on purpose. ``prepare``/``energy_exact`` walk the
full ``2**n`` statevector gate by gate and are kept deliberately plain; the
``SectorEngine`` reproduces the same numbers inside a single sector with batched
matrix products and is what the training loop uses. The test suite pins the two
routes against each other.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .qsim import (
    PauliString,
    StateVector,
    apply_1q,
    apply_rz,
    basis_state,
    bits_to_index,
    expect_pauli_sum,
    sample_indices,
)
from .spinchain import XXZSpec, build_terms

TAU_DEFAULT = math.pi / 4

# Readout rotations sending the measured axis onto z: conjugating sigma_z by
# exp(+i pi/4 sigma_y) gives sigma_x, by exp(-i pi/4 sigma_x) gives sigma_y.
_ROT_X_SETTING = np.array([[1, 1], [-1, 1]], dtype=complex) / math.sqrt(2)
_ROT_Y_SETTING = np.array([[1, -1j], [-1j, 1]], dtype=complex) / math.sqrt(2)


@dataclass(frozen=True)
class EntanglerSpec:
    """Hopping couplings and evolution time defining the fixed entangler."""

    n_qubits: int
    nn_couplings: tuple[float, ...]
    nnn_couplings: tuple[float, ...] = ()
    tau: float = TAU_DEFAULT

    def __post_init__(self):
        n = self.n_qubits
        if n < 1:
            raise ValueError("need at least one qubit")
        object.__setattr__(self, "nn_couplings", tuple(float(g) for g in self.nn_couplings))
        nnn = tuple(float(g) for g in self.nnn_couplings)
        if not nnn:
            nnn = (0.0,) * max(n - 2, 0)
        object.__setattr__(self, "nnn_couplings", nnn)
        if len(self.nn_couplings) != n - 1:
            raise ValueError(f"need {n - 1} nearest-neighbour couplings")
        if len(self.nnn_couplings) != max(n - 2, 0):
            raise ValueError(f"need {max(n - 2, 0)} next-nearest couplings")
        if self.tau <= 0:
            raise ValueError("tau must be positive")

    @classmethod
    def uniform(
        cls, n_qubits: int, g: float = 1.0, nnn_ratio: float = 0.0, tau: float = TAU_DEFAULT
    ) -> "EntanglerSpec":
        """Equal couplings g on all bonds, optionally with i,i+2 leakage."""
        return cls(
            n_qubits,
            (g,) * (n_qubits - 1),
            (g * nnn_ratio,) * max(n_qubits - 2, 0),
            tau,
        )

    def pairs(self) -> list[tuple[int, int, float]]:
        """(i, j, g) hopping pairs with nonzero coupling."""
        out = [(i, i + 1, g) for i, g in enumerate(self.nn_couplings) if g != 0.0]
        out += [(i, i + 2, g) for i, g in enumerate(self.nnn_couplings) if g != 0.0]
        return out

    def hopping_terms(self) -> list[PauliString]:
        """The generator as Pauli strings: g/2 (XX + YY) per coupled pair."""
        terms = []
        for i, j, g in self.pairs():
            terms.append(PauliString(((i, "X"), (j, "X")), 0.5 * g))
            terms.append(PauliString(((i, "Y"), (j, "Y")), 0.5 * g))
        return terms


@lru_cache(maxsize=128)
def _sector_basis(n_qubits: int, weight: int) -> np.ndarray:
    """Ascending basis indices with the given popcount."""
    idx = np.arange(2**n_qubits, dtype=np.int64)
    return idx[np.bitwise_count(idx) == weight]


@lru_cache(maxsize=512)
def _entangler_block(ent: EntanglerSpec, weight: int) -> np.ndarray:
    """Dense unitary of the entangler restricted to one weight sector.

    The hopping generator only moves an excitation between two sites, so its
    matrix in the sector basis is sparse and real; one Hermitian eigensolve per
    (spec, weight) pair is then cached for the lifetime of the process.
    """
    basis = _sector_basis(ent.n_qubits, weight)
    dim = basis.size
    pos = {int(m): k for k, m in enumerate(basis)}
    h0 = np.zeros((dim, dim))
    for i, j, g in ent.pairs():
        for k, m in enumerate(basis):
            m = int(m)
            if ((m >> i) & 1) != ((m >> j) & 1):
                h0[pos[m ^ (1 << i) ^ (1 << j)], k] += g
    w, v = np.linalg.eigh(h0)
    return (v * np.exp(-1j * ent.tau * w)) @ v.T


def apply_entangler(state: StateVector, ent: EntanglerSpec) -> StateVector:
    """Apply the entangler to a full statevector, sector by sector."""
    if ent.n_qubits != state.n_qubits:
        raise ValueError("entangler and state disagree on qubit count")
    out = np.empty_like(state.amps)
    for weight in range(state.n_qubits + 1):
        basis = _sector_basis(state.n_qubits, weight)
        out[basis] = _entangler_block(ent, weight) @ state.amps[basis]
    return StateVector(state.n_qubits, out)


@dataclass
class CircuitParams:
    """Rotation angles, one row per layer and one column per qubit."""

    thetas: np.ndarray

    def __post_init__(self):
        self.thetas = np.asarray(self.thetas, dtype=np.float64)
        if self.thetas.ndim != 2 or self.thetas.shape[0] < 1:
            raise ValueError("thetas must be (n_layers, n_qubits) with n_layers >= 1")

    @classmethod
    def random_init(
        cls, n_layers: int, n_qubits: int, rng: np.random.Generator
    ) -> "CircuitParams":
        """Angles drawn uniformly from [0, 2 pi)."""
        return cls(rng.uniform(0.0, 2.0 * math.pi, size=(n_layers, n_qubits)))

    @property
    def n_layers(self) -> int:
        return self.thetas.shape[0]

    @property
    def n_qubits(self) -> int:
        return self.thetas.shape[1]


def prepare(x: str, params: CircuitParams, ent: EntanglerSpec) -> StateVector:
    """Run the circuit on a basis-state input.

    Each layer applies the entangler first and then its z rotations, so the
    last operation on the state is a rotation sublayer.
    """
    if params.n_qubits != ent.n_qubits:
        raise ValueError("params and entangler disagree on qubit count")
    state = basis_state(ent.n_qubits, x)
    for row in params.thetas:
        state = apply_entangler(state, ent)
        for q, theta in enumerate(row):
            state = apply_rz(state, q, theta)
    return state


def energy_exact(
    x: str, params: CircuitParams, ent: EntanglerSpec, chain: XXZSpec
) -> float:
    """Exact chain energy of the prepared state."""
    return expect_pauli_sum(prepare(x, params, ent), build_terms(chain))


def energy_shots(
    x: str,
    params: CircuitParams,
    ent: EntanglerSpec,
    chain: XXZSpec,
    shots_per_setting: int,
    rng: np.random.Generator,
) -> float:
    """Estimate the chain energy from simulated projective measurements.

    Three measurement settings cover the chain: an x setting (every qubit
    rotated by exp(+i pi/4 sigma_y)) reads all XX bonds at once, a y setting
    (exp(-i pi/4 sigma_x)) reads the YY bonds, and the bare z basis reads ZZ
    bonds and fields. Settings with no terms are skipped. The estimate is
    unbiased with variance falling off as 1/shots.
    """
    if shots_per_setting < 1:
        raise ValueError("shots_per_setting must be positive")
    state = prepare(x, params, ent)
    groups: dict[str, list[PauliString]] = {"X": [], "Y": [], "Z": []}
    for term in build_terms(chain):
        axes = {a for _, a in term.factors}
        if len(axes) != 1:
            raise ValueError(f"mixed-axis term not measurable in one setting: {term}")
        groups[axes.pop()].append(term)

    total = 0.0
    for axis, terms in groups.items():
        if not terms:
            continue
        rotated = state
        if axis != "Z":
            gate = _ROT_X_SETTING if axis == "X" else _ROT_Y_SETTING
            for q in range(state.n_qubits):
                rotated = apply_1q(rotated, q, gate)
        samples = sample_indices(rotated, shots_per_setting, rng)
        for term in terms:
            signs = np.ones(shots_per_setting)
            for q, _ in term.factors:
                signs *= 1.0 - 2.0 * ((samples >> q) & 1)
            total += term.coefficient * float(signs.mean())
    return total


# ---------------------------------------------------------------------------
# Sector-restricted fast path
# ---------------------------------------------------------------------------


def _sector_hamiltonian(chain: XXZSpec, basis: np.ndarray) -> np.ndarray:
    """Chain Hamiltonian restricted to a fixed-weight sector (dense, real)."""
    dim = basis.size
    pos = {int(m): k for k, m in enumerate(basis)}
    ham = np.zeros((dim, dim))
    n = chain.n_sites
    bits = ((basis[:, None] >> np.arange(n)[None, :]) & 1).astype(np.float64)
    signs = 1.0 - 2.0 * bits
    diag = np.zeros(dim)
    if chain.delta != 0.0:
        for i in range(n - 1):
            diag += chain.delta * signs[:, i] * signs[:, i + 1]
    if chain.h != 0.0:
        diag += chain.h * signs.sum(axis=1)
    ham[np.arange(dim), np.arange(dim)] = diag
    # XX + YY on a bond flips an antiparallel pair with amplitude 2.
    for i in range(n - 1):
        for k, m in enumerate(basis):
            m = int(m)
            if ((m >> i) & 1) != ((m >> (i + 1)) & 1):
                ham[pos[m ^ (1 << i) ^ (1 << (i + 1))], k] += 2.0
    return ham


class SectorEngine:
    """Circuit and energy evaluation inside one Hamming-weight sector.

    Rz sublayers are diagonal phases and the entangler block is a cached dense
    unitary, so states, energies, and parameter-shift gradients all reduce to
    small matrix products of dimension C(n, weight).
    """

    def __init__(self, chain: XXZSpec, ent: EntanglerSpec, weight: int):
        if chain.n_sites != ent.n_qubits:
            raise ValueError("chain and entangler disagree on qubit count")
        if not 0 <= weight <= chain.n_sites:
            raise ValueError(f"weight {weight} out of range")
        self.n = chain.n_sites
        self.weight = weight
        self.basis = _sector_basis(self.n, weight)
        self.dim = self.basis.size
        self.bits = ((self.basis[:, None] >> np.arange(self.n)[None, :]) & 1).astype(
            np.float64
        )
        self.ug = _entangler_block(ent, weight)
        self.ham = _sector_hamiltonian(chain, self.basis)
        self._pos = {int(m): k for k, m in enumerate(self.basis)}
        self._shift = self._shift_phases()

    def position(self, x_index: int) -> int:
        """Sector coordinate of a full-space basis index."""
        return self._pos[x_index]

    def _phases(self, theta_row: np.ndarray) -> np.ndarray:
        # rz phase per sector basis state: exp(i (b . theta - sum(theta)/2))
        return np.exp(1j * (self.bits @ theta_row - 0.5 * theta_row.sum()))

    def state(self, thetas: np.ndarray, x_index: int) -> np.ndarray:
        """Sector coordinates of the prepared state for one basis input."""
        psi = np.zeros(self.dim, dtype=complex)
        psi[self.position(x_index)] = 1.0
        for row in thetas:
            psi = self._phases(row) * (self.ug @ psi)
        return psi

    def embed(self, sector_vec: np.ndarray) -> np.ndarray:
        """Lift sector coordinates back to full 2**n amplitudes."""
        amps = np.zeros(2**self.n, dtype=complex)
        amps[self.basis] = sector_vec
        return amps

    def energy(self, thetas: np.ndarray, x_index: int) -> float:
        psi = self.state(thetas, x_index)
        return float(np.real(np.vdot(psi, self.ham @ psi)))

    def unitary(self, thetas: np.ndarray) -> np.ndarray:
        """Sector unitary of the whole circuit."""
        u = np.eye(self.dim, dtype=complex)
        for row in thetas:
            u = self._phases(row)[:, None] * (self.ug @ u)
        return u

    def energies_all(self, thetas: np.ndarray) -> np.ndarray:
        """Energy of every basis input in the sector, aligned with ``basis``."""
        u = self.unitary(thetas)
        return np.einsum("rx,rx->x", u.conj(), self.ham @ u).real

    def energies_multi_theta(self, theta_stack: np.ndarray, x_index: int) -> np.ndarray:
        """Energies of one basis input under a stack of parameter sets.

        ``theta_stack`` has shape (n_settings, n_layers, n_qubits); the settings
        share every entangler application, so the whole batch runs as one
        matrix pipeline.
        """
        n_set = theta_stack.shape[0]
        psi = np.zeros((self.dim, n_set), dtype=complex)
        psi[self.position(x_index), :] = 1.0
        for k in range(theta_stack.shape[1]):
            rows = theta_stack[:, k, :]  # (n_set, n_qubits)
            phases = np.exp(1j * (self.bits @ rows.T - 0.5 * rows.sum(axis=1)[None, :]))
            psi = phases * (self.ug @ psi)
        return np.einsum("rs,rs->s", psi.conj(), self.ham @ psi).real

    def _shift_phases(self) -> np.ndarray:
        """(dim, 2 n) phase columns for +pi/2 and -pi/2 shifts on each qubit.

        Column 2 q holds the +pi/2 shift on qubit q, column 2 q + 1 the -pi/2
        shift: exp(+-i pi/2 (b_q - 1/2)).
        """
        cols = np.empty((self.dim, 2 * self.n), dtype=complex)
        for q in range(self.n):
            base = 1j * math.pi / 2.0 * (self.bits[:, q] - 0.5)
            cols[:, 2 * q] = np.exp(base)
            cols[:, 2 * q + 1] = np.exp(-base)
        return cols

    def psr_grad(self, thetas: np.ndarray, x_index: int) -> np.ndarray:
        """Parameter-shift energy gradient for one basis input.

        Entry (k, q) is (E(theta_kq + pi/2) - E(theta_kq - pi/2)) / 2. All
        shifted evaluations share the layer pipeline: the shifted copies of the
        running state join a growing batch that the remaining layers act on.
        """
        d = thetas.shape[0]
        shift = self._shift
        psi = np.zeros(self.dim, dtype=complex)
        psi[self.position(x_index)] = 1.0
        batch = np.empty((self.dim, 0), dtype=complex)
        for k in range(d):
            ph = self._phases(thetas[k])
            batch = ph[:, None] * (self.ug @ batch)
            psi = ph * (self.ug @ psi)
            # the +-pi/2 shift commutes with the rotation sublayer it belongs to
            batch = np.concatenate([batch, shift * psi[:, None]], axis=1)
        energies = np.einsum("rs,rs->s", batch.conj(), self.ham @ batch).real
        energies = energies.reshape(d, self.n, 2)
        return 0.5 * (energies[:, :, 0] - energies[:, :, 1])

    def psr_grad_weighted(self, thetas: np.ndarray, weights: np.ndarray) -> np.ndarray:
        """Parameter-shift gradient of ``sum_x w_x E_x`` over the sector.

        Uses cached prefix and suffix products of the layer unitaries, so each
        of the 2 d n shifted circuit unitaries costs one matrix product instead
        of a full re-simulation.
        """
        d = thetas.shape[0]
        weights = np.asarray(weights, dtype=np.float64)
        if weights.shape != (self.dim,):
            raise ValueError(f"need {self.dim} weights, got {weights.shape}")
        phases = [self._phases(row) for row in thetas]
        prefixes = [np.eye(self.dim, dtype=complex)]
        for k in range(d):
            prefixes.append(phases[k][:, None] * (self.ug @ prefixes[k]))
        suffix = np.eye(self.dim, dtype=complex)  # product of layers above k
        shift = self._shift
        grad = np.empty((d, self.n))
        for k in range(d - 1, -1, -1):
            # shifted unitary: suffix . diag(shift) . diag(phase_k) . ug . prefix_k
            mid = self.ug @ prefixes[k]
            scaled = (shift * phases[k][:, None]).T[:, :, None] * mid[None, :, :]
            us = suffix @ scaled  # (2 n, dim, dim)
            e = np.einsum("srx,srx,x->s", us.conj(), self.ham @ us, weights).real
            e = e.reshape(self.n, 2)
            grad[k] = 0.5 * (e[:, 0] - e[:, 1])
            suffix = suffix @ (phases[k][:, None] * self.ug)
        return grad


@lru_cache(maxsize=512)
def sector_engine(chain: XXZSpec, ent: EntanglerSpec, weight: int) -> SectorEngine:
    return SectorEngine(chain, ent, weight)


def energies_all_inputs(
    thetas: np.ndarray, ent: EntanglerSpec, chain: XXZSpec
) -> np.ndarray:
    """Exact circuit energy of every basis input, indexed by basis index."""
    out = np.empty(2**chain.n_sites)
    for weight in range(chain.n_sites + 1):
        eng = sector_engine(chain, ent, weight)
        out[eng.basis] = eng.energies_all(thetas)
    return out
