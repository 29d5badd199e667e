"""Open XXZ chains and exact thermal references via dense diagonalization."""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .errors import CapacityError
from .qsim import PauliString, dense_matrix

MAX_DENSE_SITES = 14


@dataclass(frozen=True)
class XXZSpec:
    """Open chain sum_i (XX + YY + delta ZZ) on bonds plus a uniform z field h.

    ``delta = 0`` is the XY chain. A single site (``n_sites = 1``) degenerates
    to the pure field Hamiltonian ``h * sigma_z``, which is occasionally handy
    as a closed-form reference.
    """

    n_sites: int
    delta: float = 0.0
    h: float = 0.0

    def __post_init__(self):
        if self.n_sites < 1:
            raise ValueError("chain needs at least one site")


def build_terms(spec: XXZSpec) -> list[PauliString]:
    """Pauli terms of the chain; zero-coefficient terms are dropped."""
    terms = []
    for i in range(spec.n_sites - 1):
        terms.append(PauliString(((i, "X"), (i + 1, "X"))))
        terms.append(PauliString(((i, "Y"), (i + 1, "Y"))))
        if spec.delta != 0.0:
            terms.append(PauliString(((i, "Z"), (i + 1, "Z")), spec.delta))
    if spec.h != 0.0:
        for i in range(spec.n_sites):
            terms.append(PauliString(((i, "Z"),), spec.h))
    return terms


@dataclass(frozen=True)
class GibbsReference:
    """Exact thermal quantities of a chain at one inverse temperature."""

    beta: float
    free_energy: float
    energy: float
    entropy: float
    weights: np.ndarray  # Boltzmann populations, aligned with the spectrum
    rho: np.ndarray  # exp(-beta H) / Z, dense


class SpectralOracle:
    """Full spectrum of a chain, with Gibbs references cached per beta.

    Eigenvalues come back ascending. Eigenvectors are real (the Hamiltonian is
    real symmetric in the computational basis) and sign-fixed so their first
    component above 1e-8 in magnitude is positive, which keeps projections
    reproducible run to run.
    """

    def __init__(self, spec: XXZSpec):
        if spec.n_sites > MAX_DENSE_SITES:
            raise CapacityError(
                f"dense diagonalization capped at {MAX_DENSE_SITES} sites, got {spec.n_sites}"
            )
        self.spec = spec
        h = dense_matrix(build_terms(spec), spec.n_sites)
        if np.abs(h.imag).max() > 1e-12:
            raise ValueError("chain Hamiltonian should be real in this basis")
        energies, states = np.linalg.eigh(h.real)
        for k in range(states.shape[1]):
            col = states[:, k]
            lead = np.argmax(np.abs(col) > 1e-8)
            if col[lead] < 0:
                states[:, k] = -col
        self.energies: np.ndarray = energies
        self.states: np.ndarray = states
        self._gibbs_cache: dict[float, GibbsReference] = {}

    @property
    def dim(self) -> int:
        return self.energies.size

    def gibbs(self, beta: float) -> GibbsReference:
        if beta <= 0:
            raise ValueError("beta must be positive")
        beta = float(beta)
        if beta not in self._gibbs_cache:
            e0 = self.energies[0]
            raw = np.exp(-beta * (self.energies - e0))
            z = raw.sum()
            weights = raw / z
            free_energy = float(e0 - math.log(z) / beta)
            energy = float(weights @ self.energies)
            entropy = float(beta * (energy - free_energy))
            rho = (self.states * weights) @ self.states.T
            self._gibbs_cache[beta] = GibbsReference(
                beta, free_energy, energy, entropy, weights, rho
            )
        return self._gibbs_cache[beta]


@lru_cache(maxsize=64)
def spectral_oracle(spec: XXZSpec) -> SpectralOracle:
    """Memoized oracle constructor; specs are frozen so they hash cleanly."""
    return SpectralOracle(spec)


def exact_gibbs(spec: XXZSpec, beta: float) -> GibbsReference:
    """Exact F, E, S and the Gibbs density matrix of a chain at ``beta``."""
    return spectral_oracle(spec).gibbs(beta)


def eigen_basis_projection(obj: np.ndarray, oracle: SpectralOracle) -> np.ndarray:
    """Rotate a state vector or density matrix into the energy eigenbasis."""
    v = oracle.states
    arr = np.asarray(obj)
    if arr.ndim == 1:
        return v.T @ arr
    if arr.ndim == 2:
        return v.T @ arr @ v
    raise ValueError(f"expected a vector or matrix, got ndim={arr.ndim}")
