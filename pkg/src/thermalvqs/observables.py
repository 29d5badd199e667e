"""Density-matrix assembly, fidelity, and thermal-quantity estimators."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .ansatz import CircuitParams, EntanglerSpec, sector_engine
from .errors import CapacityError, ValidationError
from .probmodel import ENUMERATION_CAP, BernoulliProduct
from .qsim import bits_to_index, index_to_bits
from .spinchain import XXZSpec, spectral_oracle

_HERMITIAN_TOL = 1e-8
_TRACE_TOL = 1e-6
_EIG_FLOOR = -1e-8


def assemble_gibbs(
    model: BernoulliProduct,
    params: CircuitParams,
    ent: EntanglerSpec,
    chain: XXZSpec,
) -> np.ndarray:
    """Dense ansatz density matrix sum_x p(x) |psi_x><psi_x|.

    The circuit conserves excitation number, so the result is block diagonal
    over Hamming-weight sectors and is assembled sector by sector.
    """
    n = model.n
    if n > ENUMERATION_CAP:
        raise CapacityError(f"density-matrix assembly capped at {ENUMERATION_CAP} qubits")
    if n != ent.n_qubits or n != chain.n_sites:
        raise ValueError("model, entangler and chain disagree on qubit count")
    p = np.exp(model.log_probs_all())
    rho = np.zeros((2**n, 2**n), dtype=complex)
    for weight in range(n + 1):
        eng = sector_engine(chain, ent, weight)
        u = eng.unitary(params.thetas)
        block = (u * p[eng.basis]) @ u.conj().T
        rho[np.ix_(eng.basis, eng.basis)] += block
    return rho


def _check_density_matrix(rho: np.ndarray, name: str) -> np.ndarray:
    rho = np.asarray(rho, dtype=complex)
    if rho.ndim != 2 or rho.shape[0] != rho.shape[1]:
        raise ValidationError(f"{name} must be a square matrix")
    if np.abs(rho - rho.conj().T).max() > _HERMITIAN_TOL:
        raise ValidationError(f"{name} is not Hermitian within {_HERMITIAN_TOL}")
    trace = np.trace(rho).real
    if abs(trace - 1.0) > _TRACE_TOL:
        raise ValidationError(f"{name} has trace {trace}, expected 1")
    return 0.5 * (rho + rho.conj().T)


def fidelity(rho: np.ndarray, sigma: np.ndarray) -> float:
    """Uhlmann fidelity ``(tr sqrt(sqrt(rho) sigma sqrt(rho)))**2``.

    Matrix square roots go through Hermitian eigendecompositions with small
    negative eigenvalues clamped to zero; anything below ``-1e-8`` is treated
    as an invalid input rather than noise.
    """
    rho = _check_density_matrix(rho, "rho")
    sigma = _check_density_matrix(sigma, "sigma")
    if rho.shape != sigma.shape:
        raise ValidationError("rho and sigma must have the same dimension")
    w, v = np.linalg.eigh(rho)
    if w.min() < _EIG_FLOOR:
        raise ValidationError(f"rho has eigenvalue {w.min()} below {_EIG_FLOOR}")
    sqrt_rho = (v * np.sqrt(np.clip(w, 0.0, None))) @ v.conj().T
    inner = sqrt_rho @ sigma @ sqrt_rho
    w2 = np.linalg.eigvalsh(inner)
    if w2.min() < _EIG_FLOOR:
        raise ValidationError(f"inner matrix has eigenvalue {w2.min()} below {_EIG_FLOOR}")
    value = float(np.sqrt(np.clip(w2, 0.0, None)).sum() ** 2)
    return min(value, 1.0)


@dataclass
class EigenstateReport:
    """Prepared basis states ranked against the exact spectrum.

    Row r of ``matrix`` holds ``|<n|psi(x_r)>|**2`` over eigenindices n for the
    bitstring of rank r (descending model probability); eigenstates are ordered
    by ascending energy, which is descending Boltzmann weight, so a faithful
    run puts the mass near the diagonal.
    """

    bitstrings: list[str]
    probabilities: np.ndarray
    circuit_energies: np.ndarray
    matrix: np.ndarray
    eigen_energies: np.ndarray
    gibbs_weights: np.ndarray


def identify_eigenstates(
    model: BernoulliProduct,
    params: CircuitParams,
    ent: EntanglerSpec,
    chain: XXZSpec,
    beta: float,
) -> EigenstateReport:
    """Rank basis inputs by probability and project them onto eigenstates."""
    n = model.n
    oracle = spectral_oracle(chain)
    ref = oracle.gibbs(beta)
    p = np.exp(model.log_probs_all())
    # Descending probability; ties fall back to ascending basis index so the
    # ordering is reproducible.
    order = np.argsort(-p, kind="stable")
    states = np.zeros((2**n, 2**n), dtype=complex)
    energies = np.zeros(2**n)
    for weight in range(n + 1):
        eng = sector_engine(chain, ent, weight)
        u = eng.unitary(params.thetas)
        states[np.ix_(eng.basis, eng.basis)] = u
        energies[eng.basis] = eng.energies_all(params.thetas)
    overlaps = np.abs(oracle.states.T @ states[:, order]) ** 2
    return EigenstateReport(
        bitstrings=[index_to_bits(int(m), n) for m in order],
        probabilities=p[order],
        circuit_energies=energies[order],
        matrix=overlaps.T,
        eigen_energies=oracle.energies.copy(),
        gibbs_weights=ref.weights.copy(),
    )


@dataclass(frozen=True)
class Estimate:
    value: float
    std_error: float


@dataclass(frozen=True)
class ThermalEstimates:
    """Free energy, energy and entropy from one estimation method."""

    method: str
    beta: float
    free_energy: Estimate
    energy: Estimate
    entropy: Estimate


THERMAL_METHODS = ("full_space", "sample", "thermal_relation")


def estimate_thermals(
    model: BernoulliProduct,
    params: CircuitParams,
    ent: EntanglerSpec,
    chain: XXZSpec,
    beta: float,
    method: str = "full_space",
    n_samples: int = 5,
    n_repeats: int = 20,
    rng: np.random.Generator | None = None,
) -> ThermalEstimates:
    """Thermal quantities of the trained ansatz.

    ``full_space`` sums over the enumerated distribution (no statistical
    error). ``sample`` reports Monte-Carlo means of the reward and the energy
    over ``n_repeats`` independent batches of ``n_samples``; the standard error
    is the spread of repeat means over ``sqrt(n_repeats)``. The entropy is
    analytic for a product model in every method. ``thermal_relation`` samples
    only the free energy and reconstructs the energy as ``F + S / beta``,
    which inherits the free-energy error bar and is much tighter after
    convergence, where the per-sample reward variance collapses.
    """
    if method not in THERMAL_METHODS:
        raise ValueError(f"method must be one of {THERMAL_METHODS}")
    if beta <= 0:
        raise ValueError("beta must be positive")
    entropy = model.entropy()

    if method == "full_space":
        logp = model.log_probs_all()
        p = np.exp(logp)
        energies = np.zeros(2**model.n)
        for weight in range(model.n + 1):
            eng = sector_engine(chain, ent, weight)
            energies[eng.basis] = eng.energies_all(params.thetas)
        energy = float(p @ energies)
        free_energy = float(p @ (logp / beta + energies))
        return ThermalEstimates(
            method,
            beta,
            Estimate(free_energy, 0.0),
            Estimate(energy, 0.0),
            Estimate(entropy, 0.0),
        )

    if rng is None:
        raise ValueError("sampling methods need an rng")
    if n_samples < 1 or n_repeats < 2:
        raise ValueError("need n_samples >= 1 and n_repeats >= 2")

    f_means = np.empty(n_repeats)
    e_means = np.empty(n_repeats)
    for r in range(n_repeats):
        xs = model.sample(n_samples, rng)
        energies = np.array(
            [
                sector_engine(chain, ent, x.count("1")).energy(
                    params.thetas, bits_to_index(x)
                )
                for x in xs
            ]
        )
        logps = np.array([model.log_prob(x) for x in xs])
        f_means[r] = float(np.mean(logps / beta + energies))
        e_means[r] = float(np.mean(energies))

    f_est = Estimate(
        float(f_means.mean()), float(f_means.std(ddof=1) / np.sqrt(n_repeats))
    )
    if method == "sample":
        e_est = Estimate(
            float(e_means.mean()), float(e_means.std(ddof=1) / np.sqrt(n_repeats))
        )
    else:  # thermal_relation: E = F + S / beta, S carries no sampling error
        e_est = Estimate(f_est.value + entropy / beta, f_est.std_error)
    return ThermalEstimates(
        method, beta, f_est, e_est, Estimate(entropy, 0.0)
    )
