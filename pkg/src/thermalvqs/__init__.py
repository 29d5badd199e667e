"""Variational preparation of thermal Gibbs states on small spin chains.

A classically sampled product distribution feeds computational basis states
into a parameterized number-conserving circuit; gradient descent on the free
energy of the resulting mixture converges to the Gibbs state of an XXZ chain.
Everything runs on dense statevectors, so chains up to about 14 sites are
practical on one core.
"""

from .ansatz import (
    CircuitParams,
    EntanglerSpec,
    SectorEngine,
    energies_all_inputs,
    energy_exact,
    energy_shots,
    prepare,
    sector_engine,
)
from .errors import CapacityError, ValidationError
from .observables import (
    EigenstateReport,
    Estimate,
    ThermalEstimates,
    assemble_gibbs,
    estimate_thermals,
    fidelity,
    identify_eigenstates,
)
from .probmodel import BernoulliProduct
from .qsim import PauliString, StateVector, basis_state, bits_to_index, index_to_bits
from .spinchain import GibbsReference, SpectralOracle, XXZSpec, build_terms, exact_gibbs, spectral_oracle
from .vfe import (
    AdamState,
    RunRecord,
    TrainConfig,
    adam_step,
    grad_phi_full_space,
    grad_phi_reinforce,
    grad_theta_psr,
    grad_theta_spsa,
    loss_full_space,
    loss_sample,
    reward,
    train,
)

__version__ = "0.1.0"

__all__ = [
    "AdamState",
    "BernoulliProduct",
    "CapacityError",
    "CircuitParams",
    "EigenstateReport",
    "EntanglerSpec",
    "Estimate",
    "GibbsReference",
    "PauliString",
    "RunRecord",
    "SectorEngine",
    "SpectralOracle",
    "StateVector",
    "ThermalEstimates",
    "TrainConfig",
    "ValidationError",
    "XXZSpec",
    "adam_step",
    "assemble_gibbs",
    "basis_state",
    "bits_to_index",
    "build_terms",
    "energies_all_inputs",
    "energy_exact",
    "energy_shots",
    "estimate_thermals",
    "exact_gibbs",
    "fidelity",
    "grad_phi_full_space",
    "grad_phi_reinforce",
    "grad_theta_psr",
    "grad_theta_spsa",
    "identify_eigenstates",
    "loss_full_space",
    "loss_sample",
    "prepare",
    "reward",
    "sector_engine",
    "spectral_oracle",
    "train",
]
