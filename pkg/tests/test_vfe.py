"""Loss, gradient estimators, Adam, and the training loop."""

import numpy as np
import pytest

from thermalvqs.ansatz import CircuitParams, EntanglerSpec, energies_all_inputs
from thermalvqs.probmodel import BernoulliProduct
from thermalvqs.qsim import index_to_bits
from thermalvqs.spinchain import XXZSpec, exact_gibbs
from thermalvqs.vfe import (
    AdamState,
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

TEN_LN2 = 6.931471805599453


def random_model_params(n, d, seed, logit_scale=1.0):
    rng = np.random.default_rng(seed)
    model = BernoulliProduct(rng.normal(scale=logit_scale, size=n))
    params = CircuitParams(rng.uniform(0, 2 * np.pi, size=(d, n)))
    return model, params


# --- reward and loss ---------------------------------------------------------


def test_uniform_model_loss_is_entropy_term_only():
    # mean diagonal energy over the uniform mixture is Tr(H)/2^N = 0, for any
    # circuit parameters, so the loss reduces to -N ln2 / beta
    chain = XXZSpec(5, 0.0, 0.5)
    ent = EntanglerSpec.uniform(5)
    model = BernoulliProduct.uniform(5)
    for seed in (0, 1):
        rng = np.random.default_rng(seed)
        params = CircuitParams(
            np.zeros((5, 5)) if seed == 0 else rng.uniform(0, 2 * np.pi, (5, 5))
        )
        loss = loss_full_space(model, params, ent, chain, 0.5)
        assert abs(loss + TEN_LN2) < 1e-12


def test_near_deterministic_model_reward():
    # p(x="1") ~ 1: reward is the bare energy <1|h sigma_z|1> = -h
    chain = XXZSpec(1, 0.0, 0.5)
    ent = EntanglerSpec.uniform(1)
    model = BernoulliProduct(np.array([60.0]))
    params = CircuitParams(np.zeros((1, 1)))
    assert abs(reward("1", model, params, ent, chain, 0.5) - (-0.5)) < 1e-12


def test_loss_sample_is_batch_mean_of_rewards():
    chain = XXZSpec(3, 0.0, 0.5)
    ent = EntanglerSpec.uniform(3)
    model, params = random_model_params(3, 2, 51)
    batch = ["101", "010", "101"]
    want = np.mean([reward(x, model, params, ent, chain, 0.7) for x in batch])
    assert abs(loss_sample(batch, model, params, ent, chain, 0.7) - want) < 1e-13


def test_variational_lower_bound_over_random_draws():
    for n, beta in ((4, 0.5), (4, 2.0), (3, 1.0)):
        chain = XXZSpec(n, 0.0, 0.5)
        ent = EntanglerSpec.uniform(n)
        f_exact = exact_gibbs(chain, beta).free_energy
        rng = np.random.default_rng(52)
        for _ in range(100):
            model = BernoulliProduct(rng.normal(scale=2.0, size=n))
            params = CircuitParams(rng.uniform(0, 2 * np.pi, size=(3, n)))
            loss = loss_full_space(model, params, ent, chain, beta)
            assert loss >= f_exact - 1e-9


def test_loss_sample_unbiased_for_full_space():
    chain = XXZSpec(3, 0.0, 0.5)
    ent = EntanglerSpec.uniform(3)
    model, params = random_model_params(3, 2, 53)
    beta = 0.8
    exact = loss_full_space(model, params, ent, chain, beta)
    # precompute the reward of each basis string once
    rewards = {
        x: reward(x, model, params, ent, chain, beta)
        for x in (index_to_bits(i, 3) for i in range(8))
    }
    rng = np.random.default_rng(54)
    draws = np.array([rewards[x] for x in model.sample(10_000, rng)])
    sem = draws.std(ddof=1) / np.sqrt(draws.size)
    assert abs(draws.mean() - exact) < 4 * sem


# --- classical-side gradients --------------------------------------------------


def test_grad_phi_full_space_matches_finite_difference():
    chain = XXZSpec(3, 0.3, 0.2)
    ent = EntanglerSpec.uniform(3)
    model, params = random_model_params(3, 2, 55)
    beta = 0.6
    grad = grad_phi_full_space(model, params, ent, chain, beta)
    h = 1e-6
    for i in range(3):
        up, dn = model.logits.copy(), model.logits.copy()
        up[i] += h
        dn[i] -= h
        fd = (
            loss_full_space(BernoulliProduct(up), params, ent, chain, beta)
            - loss_full_space(BernoulliProduct(dn), params, ent, chain, beta)
        ) / (2 * h)
        assert abs(grad[i] - fd) < 1e-6


def test_baseline_term_vanishes_under_enumeration():
    # E_p[grad log p] = 0, so any constant baseline leaves the gradient alone
    model = BernoulliProduct(np.array([0.7, -1.2, 0.4]))
    total = np.zeros(3)
    for idx in range(8):
        x = index_to_bits(idx, 3)
        total += np.exp(model.log_prob(x)) * model.grad_log_prob(x)
    assert np.abs(total).max() < 1e-10


def test_reinforce_batch_with_identical_samples_is_zero():
    chain = XXZSpec(3, 0.0, 0.5)
    ent = EntanglerSpec.uniform(3)
    model, params = random_model_params(3, 2, 56)
    grad = grad_phi_reinforce(["101", "101"], model, params, ent, chain, 0.5)
    assert np.abs(grad).max() == 0.0


def test_reinforce_expectation_scales_with_batch_baseline():
    # subtracting the same-batch mean couples the baseline to each sample:
    # E[estimator] = (1 - 1/B) * exact gradient for batch size B
    chain = XXZSpec(3, 0.0, 0.5)
    ent = EntanglerSpec.uniform(3)
    model, params = random_model_params(3, 2, 57)
    beta = 0.8
    exact = grad_phi_full_space(model, params, ent, chain, beta)
    rng = np.random.default_rng(58)
    batch_size = 3
    draws = np.stack(
        [
            grad_phi_reinforce(
                model.sample(batch_size, rng), model, params, ent, chain, beta
            )
            for _ in range(4000)
        ]
    )
    mean = draws.mean(axis=0)
    sem = draws.std(axis=0, ddof=1) / np.sqrt(draws.shape[0])
    want = (1 - 1 / batch_size) * exact
    assert np.all(np.abs(mean - want) < 4 * sem + 1e-12)


# --- circuit-side gradients ----------------------------------------------------


def test_grad_theta_psr_batch_matches_finite_difference():
    chain = XXZSpec(3, 0.3, 0.2)
    ent = EntanglerSpec.uniform(3)
    _, params = random_model_params(3, 2, 59)
    batch = ["101", "100", "101", "011"]

    def mean_energy(thetas):
        table = energies_all_inputs(thetas, ent, chain)
        return np.mean([table[int(x[::-1], 2)] for x in batch])

    got = grad_theta_psr(batch, params, ent, chain)
    h = 1e-6
    want = np.empty_like(got)
    for k in range(2):
        for q in range(3):
            up, dn = params.thetas.copy(), params.thetas.copy()
            up[k, q] += h
            dn[k, q] -= h
            want[k, q] = (mean_energy(up) - mean_energy(dn)) / (2 * h)
    assert np.abs(got - want).max() < 1e-6


def test_grad_theta_psr_requires_exactly_one_input_kind():
    chain = XXZSpec(2, 0.0, 0.5)
    ent = EntanglerSpec.uniform(2)
    _, params = random_model_params(2, 1, 60)
    with pytest.raises(ValueError):
        grad_theta_psr(None, params, ent, chain)
    with pytest.raises(ValueError):
        grad_theta_psr(["10"], params, ent, chain, weights=np.ones(4) / 4)


def test_spsa_single_parameter_is_exact():
    # with one parameter the perturbation cancels: one draw gives the psr value
    chain = XXZSpec(1, 0.0, 0.5)
    ent = EntanglerSpec.uniform(1)
    params = CircuitParams(np.array([[0.3]]))
    rng = np.random.default_rng(61)
    got = grad_theta_spsa(["1"], params, ent, chain, 1, 0.05, rng)
    want = grad_theta_psr(["1"], params, ent, chain)
    # single-qubit z-rotation leaves the diagonal energy alone: both vanish
    assert abs(got[0, 0] - want[0, 0]) < 1e-10


def test_spsa_converges_to_psr_with_root_m_rate():
    chain = XXZSpec(3, 0.0, 0.5)
    ent = EntanglerSpec.uniform(3)
    model, params = random_model_params(3, 2, 62)
    p = np.exp(model.log_probs_all())
    target = grad_theta_psr(None, params, ent, chain, weights=p)
    rng = np.random.default_rng(63)
    m_grid = [8, 32, 128, 512]
    errors = []
    for m in m_grid:
        errs = [
            np.linalg.norm(
                grad_theta_spsa(None, params, ent, chain, m, 0.02, rng, weights=p)
                - target
            )
            for _ in range(30)
        ]
        errors.append(np.mean(errs))
    slope = np.polyfit(np.log(m_grid), np.log(errors), 1)[0]
    assert abs(slope + 0.5) < 0.15


# --- Adam ----------------------------------------------------------------------


def test_adam_first_step_is_signed_learning_rate():
    params = np.array([1.0, -2.0, 3.0])
    grads = np.array([0.5, -0.25, 1.0])
    state = AdamState.like(params)
    new = adam_step(state, params, grads, 0.05)
    assert np.abs(new - (params - 0.05 * np.sign(grads))).max() < 1e-6


def test_adam_zero_gradient_is_noop():
    params = np.array([1.0, 2.0])
    state = AdamState.like(params)
    new = adam_step(state, params, np.zeros(2), 0.1)
    assert np.array_equal(new, params)


def test_adam_constant_gradient_moves_monotonically():
    params = np.array([0.0])
    state = AdamState.like(params)
    g = np.array([1.0])
    p1 = adam_step(state, params, g, 0.1)
    p2 = adam_step(state, p1, g, 0.1)
    assert p1[0] < params[0] and p2[0] < p1[0]


# --- self-verification ----------------------------------------------------------


class BoltzmannOverEnergies:
    """Distribution proportional to exp(-beta E(x)); log_prob duck type."""

    def __init__(self, energies, beta, n):
        self.n = n
        shifted = -beta * (energies - energies.min())
        self.log_z = np.log(np.exp(shifted).sum()) - beta * energies.min()
        self.beta = beta
        self.energies = energies

    def log_prob(self, x):
        idx = int(x[::-1], 2)
        return -self.beta * self.energies[idx] - self.log_z


def test_boltzmann_model_gives_zero_reward_variance():
    chain = XXZSpec(3, 0.0, 0.5)
    ent = EntanglerSpec.uniform(3)
    _, params = random_model_params(3, 2, 64)
    beta = 0.9
    energies = energies_all_inputs(params.thetas, ent, chain)
    model = BoltzmannOverEnergies(energies, beta, 3)
    rewards = np.array(
        [
            reward(index_to_bits(i, 3), model, params, ent, chain, beta)
            for i in range(8)
        ]
    )
    assert rewards.var() < 1e-10
    # and every reward equals the loss that the distribution realizes
    assert np.abs(rewards - rewards.mean()).max() < 1e-8


# --- config validation -----------------------------------------------------------


def test_config_validation_messages():
    base = dict(beta=0.5, n_layers=2)
    TrainConfig(**base).validate()
    with pytest.raises(ValueError, match="beta"):
        TrainConfig(**{**base, "beta": -1.0}).validate()
    with pytest.raises(ValueError, match="mode"):
        TrainConfig(**{**base, "mode": "bogus"}).validate()
    with pytest.raises(ValueError, match="grad_theta"):
        TrainConfig(**{**base, "grad_theta": "exact"}).validate()
    with pytest.raises(ValueError, match="shot"):
        TrainConfig(**{**base, "shots_per_setting": 100}).validate()
    TrainConfig(**{**base, "mode": "sample", "shots_per_setting": 100}).validate()


# --- training loop ----------------------------------------------------------------


def test_training_descends_and_brackets_exact_value():
    chain = XXZSpec(4, 0.0, 0.5)
    record = train(chain, TrainConfig(beta=0.5, n_layers=4, n_iter_max=60, seed=5))
    assert record.loss_full is not None
    assert record.loss_full[-1] < record.loss_full[0]
    assert record.best_loss() >= record.f_exact - 1e-9
    assert record.best_loss() == min(record.loss_full)
    assert record.n_iter == 60


def test_training_variance_decreases():
    chain = XXZSpec(4, 0.0, 0.5)
    record = train(chain, TrainConfig(beta=0.5, n_layers=4, n_iter_max=100, seed=6))
    assert record.reward_variance[-1] < record.reward_variance[0]


def test_training_is_deterministic():
    chain = XXZSpec(3, 0.0, 0.5)
    cfg = TrainConfig(beta=0.5, n_layers=2, n_iter_max=25, seed=9)
    a = train(chain, cfg)
    b = train(chain, cfg)
    assert np.array_equal(a.loss_sample, b.loss_sample)
    assert np.array_equal(a.loss_full, b.loss_full)
    assert np.array_equal(a.thetas_best, b.thetas_best)
    assert np.array_equal(a.logits_best, b.logits_best)
    assert a.best_iteration == b.best_iteration


def test_sample_mode_with_shots_is_deterministic():
    chain = XXZSpec(3, 0.0, 0.5)
    cfg = TrainConfig(
        beta=0.5,
        n_layers=2,
        mode="sample",
        n_iter_max=4,
        seed=10,
        shots_per_setting=64,
    )
    a = train(chain, cfg)
    b = train(chain, cfg)
    assert np.array_equal(a.loss_sample, b.loss_sample)
    assert np.array_equal(a.thetas_final, b.thetas_final)


def test_early_stop_records_first_target_iteration():
    chain = XXZSpec(4, 0.0, 0.5)
    cfg = TrainConfig(
        beta=0.5, n_layers=4, n_iter_max=200, seed=7, target_epsilon=0.05
    )
    record = train(chain, cfg)
    assert record.first_target_iteration is not None
    assert record.n_iter == record.first_target_iteration
    eps = abs((record.loss_full[-1] - record.f_exact) / record.f_exact)
    assert eps < 0.05


def test_sample_mode_smoothed_selection_without_tracking():
    chain = XXZSpec(3, 0.0, 0.5)
    cfg = TrainConfig(
        beta=0.5,
        n_layers=2,
        mode="sample",
        n_iter_max=40,
        seed=8,
        track_full_space=False,
    )
    record = train(chain, cfg)
    assert record.loss_full is None
    assert record.f_exact is None
    assert record.epsilon() is None
    assert 1 <= record.best_iteration <= 40


def test_spsa_mode_trains():
    chain = XXZSpec(3, 0.0, 0.5)
    cfg = TrainConfig(
        beta=0.5, n_layers=3, mode="sample", grad_theta="spsa", n_batch=2,
        n_spsa=5, n_iter_max=200, seed=12,
    )
    record = train(chain, cfg)
    assert record.epsilon() < 0.1  # loose: stochastic but convergent
