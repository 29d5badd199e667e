"""Free-energy objective, gradient estimators, and the hybrid training loop.

The loss is the variational free energy of the mixed ansatz

    L = E_{x ~ p_phi} [ log p_phi(x) / beta + <psi_theta(x)| H |psi_theta(x)> ]

which upper-bounds the exact free energy for any parameters because the
prepared states are orthonormal. The classical side trains by the score
function (REINFORCE) estimator with a batch-mean baseline; the circuit side
trains by parameter-shift or by simultaneous-perturbation differences, both
fed into Adam.
"""

from __future__ import annotations

import math
import time
from collections import Counter, deque
from dataclasses import dataclass, replace

import numpy as np

from .ansatz import (
    CircuitParams,
    EntanglerSpec,
    energies_all_inputs,
    energy_shots,
    sector_engine,
)
from .probmodel import BernoulliProduct
from .qsim import bit_table, bits_to_index
from .spinchain import XXZSpec, exact_gibbs

SMOOTH_WINDOW = 20


# ---------------------------------------------------------------------------
# Loss and reward
# ---------------------------------------------------------------------------


def reward(
    x: str,
    model: BernoulliProduct,
    params: CircuitParams,
    ent: EntanglerSpec,
    chain: XXZSpec,
    beta: float,
) -> float:
    """Per-sample objective log p(x)/beta + E(x) with exact energies."""
    eng = sector_engine(chain, ent, x.count("1"))
    return model.log_prob(x) / beta + eng.energy(params.thetas, bits_to_index(x))


def loss_sample(
    batch: list[str],
    model: BernoulliProduct,
    params: CircuitParams,
    ent: EntanglerSpec,
    chain: XXZSpec,
    beta: float,
) -> float:
    """Batch-mean reward, the Monte-Carlo estimate of the free energy."""
    if not batch:
        raise ValueError("batch must be non-empty")
    return float(
        np.mean([reward(x, model, params, ent, chain, beta) for x in batch])
    )


def loss_full_space(
    model: BernoulliProduct,
    params: CircuitParams,
    ent: EntanglerSpec,
    chain: XXZSpec,
    beta: float,
) -> float:
    """Exact expectation of the reward over the full bitstring distribution."""
    logp = model.log_probs_all()
    energies = energies_all_inputs(params.thetas, ent, chain)
    return float(np.exp(logp) @ (logp / beta + energies))


# ---------------------------------------------------------------------------
# Gradients
# ---------------------------------------------------------------------------


def grad_phi_reinforce(
    batch: list[str],
    model: BernoulliProduct,
    params: CircuitParams,
    ent: EntanglerSpec,
    chain: XXZSpec,
    beta: float,
) -> np.ndarray:
    """Score-function logit gradient with the batch mean as baseline."""
    rewards = np.array([reward(x, model, params, ent, chain, beta) for x in batch])
    scores = np.stack([model.grad_log_prob(x) for x in batch])
    centered = rewards - rewards.mean()
    return centered @ scores / len(batch)


def grad_phi_full_space(
    model: BernoulliProduct,
    params: CircuitParams,
    ent: EntanglerSpec,
    chain: XXZSpec,
    beta: float,
) -> np.ndarray:
    """Exact logit gradient of the full-space loss."""
    logp = model.log_probs_all()
    p = np.exp(logp)
    rewards = logp / beta + energies_all_inputs(params.thetas, ent, chain)
    scores = bit_table(model.n) - model.probs()[None, :]
    # The baseline drops out exactly under full enumeration.
    return (p * (rewards - p @ rewards)) @ scores


def grad_theta_psr(
    xs: list[str] | None,
    params: CircuitParams,
    ent: EntanglerSpec,
    chain: XXZSpec,
    weights: np.ndarray | None = None,
) -> np.ndarray:
    """Parameter-shift gradient of the mean circuit energy.

    With ``xs`` given, averages the per-sample gradient over the batch (repeat
    samples are evaluated once and weighted by multiplicity). With ``weights``
    given, differentiates ``sum_x w_x E(x)`` over the whole basis instead.
    """
    thetas = params.thetas
    if (xs is None) == (weights is None):
        raise ValueError("pass exactly one of xs or weights")
    if weights is not None:
        weights = np.asarray(weights, dtype=np.float64)
        grad = np.zeros_like(thetas)
        for weight in range(chain.n_sites + 1):
            eng = sector_engine(chain, ent, weight)
            grad += eng.psr_grad_weighted(thetas, weights[eng.basis])
        return grad
    grad = np.zeros_like(thetas)
    for x, count in Counter(xs).items():
        eng = sector_engine(chain, ent, x.count("1"))
        grad += (count / len(xs)) * eng.psr_grad(thetas, bits_to_index(x))
    return grad


def grad_theta_spsa(
    xs: list[str] | None,
    params: CircuitParams,
    ent: EntanglerSpec,
    chain: XXZSpec,
    n_spsa: int,
    c: float,
    rng: np.random.Generator,
    weights: np.ndarray | None = None,
) -> np.ndarray:
    """Simultaneous-perturbation estimate of the mean-energy gradient.

    Averages ``(L(theta + c delta) - L(theta - c delta)) / (2 c) * delta`` over
    ``n_spsa`` Rademacher draws of ``delta``, where L is the batch-mean (or
    weighted full-space) energy.
    """
    if n_spsa < 1:
        raise ValueError("n_spsa must be positive")
    if c <= 0:
        raise ValueError("c must be positive")
    if (xs is None) == (weights is None):
        raise ValueError("pass exactly one of xs or weights")
    thetas = params.thetas
    deltas = rng.integers(0, 2, size=(n_spsa, *thetas.shape)) * 2.0 - 1.0
    # Stack of all shifted parameter sets, + and - interleaved per draw.
    stack = np.empty((2 * n_spsa, *thetas.shape))
    stack[0::2] = thetas[None] + c * deltas
    stack[1::2] = thetas[None] - c * deltas

    losses = np.zeros(2 * n_spsa)
    if weights is not None:
        weights = np.asarray(weights, dtype=np.float64)
        for k in range(2 * n_spsa):
            losses[k] = weights @ energies_all_inputs(stack[k], ent, chain)
    else:
        for x, count in Counter(xs).items():
            eng = sector_engine(chain, ent, x.count("1"))
            losses += (count / len(xs)) * eng.energies_multi_theta(
                stack, bits_to_index(x)
            )
    diffs = (losses[0::2] - losses[1::2]) / (2.0 * c)
    return np.einsum("s,skq->kq", diffs, deltas) / n_spsa


# ---------------------------------------------------------------------------
# Adam
# ---------------------------------------------------------------------------


@dataclass
class AdamState:
    """First and second moment accumulators plus the step counter."""

    m: np.ndarray
    v: np.ndarray
    t: int = 0

    @classmethod
    def like(cls, arr: np.ndarray) -> "AdamState":
        return cls(np.zeros_like(arr), np.zeros_like(arr))


def adam_step(
    state: AdamState,
    params: np.ndarray,
    grads: np.ndarray,
    learning_rate: float,
    beta1: float = 0.9,
    beta2: float = 0.999,
    eps: float = 1e-8,
) -> np.ndarray:
    """One bias-corrected Adam update; mutates ``state``, returns new params."""
    state.t += 1
    state.m = beta1 * state.m + (1.0 - beta1) * grads
    state.v = beta2 * state.v + (1.0 - beta2) * grads**2
    m_hat = state.m / (1.0 - beta1**state.t)
    v_hat = state.v / (1.0 - beta2**state.t)
    return params - learning_rate * m_hat / (np.sqrt(v_hat) + eps)


# ---------------------------------------------------------------------------
# Training
# ---------------------------------------------------------------------------

MODES = ("full_space", "sample")
GRADIENTS = ("psr", "spsa")


@dataclass
class TrainConfig:
    """Hyperparameters of one training run.

    ``shots_per_setting = 0`` means exact energies. ``target_epsilon`` arms an
    early stop on the relative full-space error against the exact free energy,
    which the scaling campaigns use to count iterations to a precision.
    """

    beta: float
    n_layers: int
    mode: str = "full_space"
    grad_theta: str = "psr"
    n_batch: int = 2
    n_spsa: int = 10
    spsa_c: float = 0.1
    learning_rate: float = 0.05
    adam_beta1: float = 0.9
    adam_beta2: float = 0.999
    adam_eps: float = 1e-8
    n_iter_max: int = 150
    seed: int = 1
    shots_per_setting: int = 0
    nnn_ratio: float = 0.0
    target_epsilon: float | None = None
    track_full_space: bool = True
    enum_cap: int = 14

    def validate(self) -> None:
        checks = [
            (self.beta > 0, "beta must be positive"),
            (self.n_layers >= 1, "n_layers must be at least 1"),
            (self.mode in MODES, f"mode must be one of {MODES}"),
            (self.grad_theta in GRADIENTS, f"grad_theta must be one of {GRADIENTS}"),
            (self.n_batch >= 1, "n_batch must be at least 1"),
            (self.n_spsa >= 1, "n_spsa must be at least 1"),
            (self.spsa_c > 0, "spsa_c must be positive"),
            (self.learning_rate > 0, "learning_rate must be positive"),
            (0 <= self.adam_beta1 < 1, "adam_beta1 must lie in [0, 1)"),
            (0 <= self.adam_beta2 < 1, "adam_beta2 must lie in [0, 1)"),
            (self.adam_eps > 0, "adam_eps must be positive"),
            (self.n_iter_max >= 1, "n_iter_max must be at least 1"),
            (self.seed >= 0, "seed must be a non-negative integer"),
            (self.shots_per_setting >= 0, "shots_per_setting must be >= 0"),
            (self.nnn_ratio >= 0, "nnn_ratio must be >= 0"),
            (
                self.target_epsilon is None or self.target_epsilon > 0,
                "target_epsilon must be positive when set",
            ),
            (self.enum_cap >= 1, "enum_cap must be at least 1"),
            (
                self.shots_per_setting == 0 or self.mode == "sample",
                "shot-based energies require mode='sample'",
            ),
        ]
        for ok, message in checks:
            if not ok:
                raise ValueError(message)


@dataclass
class RunRecord:
    """Per-iteration traces and the selected parameters of one run."""

    config: TrainConfig
    chain: XXZSpec
    loss_sample: np.ndarray
    loss_full: np.ndarray | None
    reward_variance: np.ndarray
    grad_phi_norm: np.ndarray
    grad_theta_norm: np.ndarray
    thetas_best: np.ndarray
    logits_best: np.ndarray
    best_iteration: int
    thetas_final: np.ndarray
    logits_final: np.ndarray
    first_target_iteration: int | None
    f_exact: float | None
    wall_seconds: float

    @property
    def n_iter(self) -> int:
        return self.loss_sample.size

    def best_loss(self) -> float:
        if self.loss_full is not None:
            return float(self.loss_full[self.best_iteration - 1])
        return float(self.loss_sample[self.best_iteration - 1])

    def epsilon(self) -> float | None:
        """Relative error of the selected iterate against the exact value."""
        if self.f_exact is None:
            return None
        return abs((self.best_loss() - self.f_exact) / self.f_exact)


def train(
    chain: XXZSpec, config: TrainConfig, ent: EntanglerSpec | None = None
) -> RunRecord:
    """Minimize the variational free energy of a chain.

    Each iteration estimates both gradients at the current parameters, applies
    one Adam update per parameter group, and then re-evaluates the full-space
    loss at the new parameters (when the register is small enough to
    enumerate). The returned record selects the iterate with the lowest
    re-evaluated loss; without enumeration the selection falls back to the
    lowest windowed average of the sampled loss.
    """
    config.validate()
    n = chain.n_sites
    if config.mode == "full_space" and n > config.enum_cap:
        raise ValueError("full_space mode needs n_sites within enum_cap")
    start = time.perf_counter()
    rng = np.random.default_rng(config.seed)
    if ent is None:
        ent = EntanglerSpec.uniform(n, nnn_ratio=config.nnn_ratio)
    beta = config.beta
    model = BernoulliProduct.uniform(n)
    params = CircuitParams.random_init(config.n_layers, n, rng)
    adam_theta = AdamState.like(params.thetas)
    adam_phi = AdamState.like(model.logits)

    track_full = config.track_full_space and n <= config.enum_cap
    f_exact = exact_gibbs(chain, beta).free_energy if track_full else None
    exact_energies = config.shots_per_setting == 0

    def sample_energy(x: str) -> float:
        if exact_energies:
            eng = sector_engine(chain, ent, x.count("1"))
            return eng.energy(params.thetas, bits_to_index(x))
        return energy_shots(
            x, params, ent, chain, config.shots_per_setting, rng
        )

    def shot_psr(xs: list[str]) -> np.ndarray:
        grad = np.zeros_like(params.thetas)
        d, nq = params.thetas.shape
        for x, count in Counter(xs).items():
            for k in range(d):
                for q in range(nq):
                    for sign, col in ((1.0, 0), (-1.0, 1)):
                        shifted = params.thetas.copy()
                        shifted[k, q] += sign * math.pi / 2.0
                        e = energy_shots(
                            x,
                            CircuitParams(shifted),
                            ent,
                            chain,
                            config.shots_per_setting,
                            rng,
                        )
                        grad[k, q] += sign * 0.5 * e * count / len(xs)
        return grad

    def shot_spsa(xs: list[str]) -> np.ndarray:
        deltas = rng.integers(0, 2, size=(config.n_spsa, *params.thetas.shape)) * 2.0 - 1.0
        grad = np.zeros_like(params.thetas)
        for delta in deltas:
            pair = []
            for sign in (1.0, -1.0):
                shifted = CircuitParams(params.thetas + sign * config.spsa_c * delta)
                pair.append(
                    np.mean(
                        [
                            energy_shots(
                                x, shifted, ent, chain, config.shots_per_setting, rng
                            )
                            for x in xs
                        ]
                    )
                )
            grad += (pair[0] - pair[1]) / (2.0 * config.spsa_c) * delta
        return grad / config.n_spsa

    loss_sample_trace: list[float] = []
    loss_full_trace: list[float] = []
    variance_trace: list[float] = []
    gphi_trace: list[float] = []
    gtheta_trace: list[float] = []

    best_full = math.inf
    best_smooth = math.inf
    smooth = deque(maxlen=SMOOTH_WINDOW)
    best_iteration = 0
    thetas_best = params.thetas.copy()
    logits_best = model.logits.copy()
    first_target: int | None = None

    # Energies at the current thetas over the whole basis (full-space mode
    # reuses the post-update evaluation of the previous iteration).
    energies_now = (
        energies_all_inputs(params.thetas, ent, chain)
        if (config.mode == "full_space" or track_full)
        else None
    )

    for iteration in range(1, config.n_iter_max + 1):
        if config.mode == "full_space":
            logp = model.log_probs_all()
            p = np.exp(logp)
            rewards = logp / beta + energies_now
            loss_now = float(p @ rewards)
            variance = float(p @ (rewards - loss_now) ** 2)
            scores = bit_table(n) - model.probs()[None, :]
            grad_phi = (p * (rewards - loss_now)) @ scores
            if config.grad_theta == "psr":
                grad_theta = grad_theta_psr(None, params, ent, chain, weights=p)
            else:
                grad_theta = grad_theta_spsa(
                    None,
                    params,
                    ent,
                    chain,
                    config.n_spsa,
                    config.spsa_c,
                    rng,
                    weights=p,
                )
        else:
            xs = model.sample(config.n_batch, rng)
            energies = np.array([sample_energy(x) for x in xs])
            logps = np.array([model.log_prob(x) for x in xs])
            rewards = logps / beta + energies
            loss_now = float(rewards.mean())
            variance = float(rewards.var(ddof=1)) if len(xs) > 1 else 0.0
            scores = np.stack([model.grad_log_prob(x) for x in xs])
            grad_phi = (rewards - rewards.mean()) @ scores / len(xs)
            if config.grad_theta == "psr":
                grad_theta = (
                    grad_theta_psr(xs, params, ent, chain)
                    if exact_energies
                    else shot_psr(xs)
                )
            else:
                grad_theta = (
                    grad_theta_spsa(
                        xs, params, ent, chain, config.n_spsa, config.spsa_c, rng
                    )
                    if exact_energies
                    else shot_spsa(xs)
                )

        params = CircuitParams(
            adam_step(
                adam_theta,
                params.thetas,
                grad_theta,
                config.learning_rate,
                config.adam_beta1,
                config.adam_beta2,
                config.adam_eps,
            )
        )
        model = BernoulliProduct(
            adam_step(
                adam_phi,
                model.logits,
                grad_phi,
                config.learning_rate,
                config.adam_beta1,
                config.adam_beta2,
                config.adam_eps,
            )
        )

        loss_sample_trace.append(loss_now)
        variance_trace.append(variance)
        gphi_trace.append(float(np.linalg.norm(grad_phi)))
        gtheta_trace.append(float(np.linalg.norm(grad_theta)))

        if track_full or config.mode == "full_space":
            energies_now = energies_all_inputs(params.thetas, ent, chain)
        if track_full:
            logp_new = model.log_probs_all()
            loss_full_now = float(np.exp(logp_new) @ (logp_new / beta + energies_now))
            loss_full_trace.append(loss_full_now)
            if loss_full_now < best_full:
                best_full = loss_full_now
                best_iteration = iteration
                thetas_best = params.thetas.copy()
                logits_best = model.logits.copy()
            if f_exact is not None and config.target_epsilon is not None:
                if abs((loss_full_now - f_exact) / f_exact) < config.target_epsilon:
                    first_target = iteration
                    break
        else:
            smooth.append(loss_now)
            smoothed = float(np.mean(smooth))
            if smoothed < best_smooth:
                best_smooth = smoothed
                best_iteration = iteration
                thetas_best = params.thetas.copy()
                logits_best = model.logits.copy()

    return RunRecord(
        config=replace(config),
        chain=chain,
        loss_sample=np.array(loss_sample_trace),
        loss_full=np.array(loss_full_trace) if track_full else None,
        reward_variance=np.array(variance_trace),
        grad_phi_norm=np.array(gphi_trace),
        grad_theta_norm=np.array(gtheta_trace),
        thetas_best=thetas_best,
        logits_best=logits_best,
        best_iteration=best_iteration,
        thetas_final=params.thetas.copy(),
        logits_final=model.logits.copy(),
        first_target_iteration=first_target,
        f_exact=f_exact,
        wall_seconds=time.perf_counter() - start,
    )
