import math
from fractions import Fraction

import numpy as np
import pytest

from langevin_ts.family import FamilySpec, PriorSpec, gaussian_family, gaussian_prior
from langevin_ts.posterior import ArmPosteriorState, GaussianPosterior
from langevin_ts.samplers import (
    SamplerConfig,
    SamplerKind,
    Schedule,
    approx_ts_gamma,
    exact_ts_gamma,
    hyperparams,
    run_langevin,
    sample_adversarial_mixture,
    sample_exact_scaled,
    sample_prior_langevin,
    sample_prior_scaled,
    theoretical_hyperparams_sgld,
    theoretical_hyperparams_ula,
    ula_step,
)


def _frac_ceil(q: Fraction) -> int:
    return -((-q.numerator) // q.denominator)


@pytest.mark.parametrize("n", [1, 2, 10, 100, 1000])
def test_ula_hyperparams_exact_rational_oracle(n):
    f = gaussian_family(1.0)
    h, N = theoretical_hyperparams_ula(f, n)
    L_hat = Fraction(1) + Fraction(1, n)
    assert h == pytest.approx(float(1 / (32 * n * L_hat**2)), rel=1e-15)
    assert N == _frac_ceil(640 * L_hat**2)


def test_ula_hyperparams_frozen_values():
    f = gaussian_family(1.0)
    assert theoretical_hyperparams_ula(f, 10)[1] == 775
    assert theoretical_hyperparams_ula(f, 100)[1] == 653
    assert theoretical_hyperparams_ula(f, 1)[1] == 2560


@pytest.mark.parametrize("n", [1, 5, 31, 32, 33, 100, 10_000])
def test_sgld_hyperparams_rational_oracle(n):
    f = gaussian_family(1.0)
    h, N, k = theoretical_hyperparams_sgld(f, n)
    k0 = 32  # ceil(32 L*^2 / (m nu)) with all constants 1
    n_eff = min(n, k0)
    assert k == min(n, k0)
    assert N == _frac_ceil(1280 * (1 + Fraction(1, n_eff)) ** 2)
    assert h == pytest.approx(theoretical_hyperparams_ula(f, n)[0], rel=1e-15)


def test_sgld_budget_constant_beyond_batch_size():
    f = gaussian_family(1.0)
    cfg = SamplerConfig(SamplerKind.SGLD)
    budgets = {hyperparams(cfg, f, n)[1] * hyperparams(cfg, f, n)[2] for n in range(32, 5000, 97)}
    assert budgets == {1362 * 32}


def test_practical_hyperparams():
    f = gaussian_family(1.0)
    assert hyperparams(SamplerConfig.practical("ula"), f, 50) == (1 / (32 * 50), 100, 50)
    assert hyperparams(SamplerConfig.practical("sgld"), f, 50) == (1 / (32 * 50), 200, 32)
    assert hyperparams(SamplerConfig.practical("sgld"), f, 7)[2] == 7


def test_config_validation():
    with pytest.raises(ValueError):
        SamplerConfig("ula", gamma=0.0)
    with pytest.raises(ValueError):
        SamplerConfig("ula", n_steps_override=10)
    with pytest.raises(ValueError):
        SamplerConfig("ula", schedule="practical")
    with pytest.raises(ValueError):
        SamplerConfig("mixture", mixture_alpha=1.5, mixture_atom=[1.0])
    with pytest.raises(ValueError):
        SamplerConfig("mixture", mixture_alpha=0.5)
    with pytest.raises(ValueError):
        SamplerConfig("bogus")
    assert SamplerConfig("exact").schedule is Schedule.THEORETICAL


def test_ula_step_oracle():
    np.testing.assert_allclose(ula_step([1.0], [2.0], 0.5, [1.0]), [1.0 - 1.0 + 1.0])
    with pytest.raises(ValueError):
        ula_step([0.0], [0.0], 0.0, [0.0])


def test_gamma_formulas():
    f = gaussian_family(1.0)
    assert exact_ts_gamma(f) == pytest.approx(1 / 8)
    assert approx_ts_gamma(f) == pytest.approx(1 / 640)


def test_exact_scaled_variance():
    post = GaussianPosterior([1.0], 4.0)
    rng = np.random.default_rng(0)
    draws = np.array([sample_exact_scaled(post, 0.5, rng)[0] for _ in range(40000)])
    # var = 1 / (gamma * precision) = 0.5
    assert draws.var() == pytest.approx(0.5, rel=0.03)
    assert draws.mean() == pytest.approx(1.0, abs=0.02)
    with pytest.raises(ValueError):
        sample_exact_scaled(post, 0.0, rng)


def test_mixture_atom_frequency():
    post = GaussianPosterior([0.0], 100.0)
    rng = np.random.default_rng(3)
    n, trials = 16, 20000
    hits = sum(sample_adversarial_mixture(post, n, 0.5, [2.0], rng)[0] == 2.0 for _ in range(trials))
    p = 16**-0.5
    assert abs(hits / trials - p) < 4 * math.sqrt(p * (1 - p) / trials)
    assert sample_adversarial_mixture(post, 1, 0.5, [2.0], rng)[0] == 2.0


def test_mixture_draw_order():
    post = GaussianPosterior([0.0], 1.0)
    r1, r2 = np.random.default_rng(9), np.random.default_rng(9)
    out = sample_adversarial_mixture(post, 10**6, 1.0, [5.0], r1)
    u = r2.random()
    assert u >= 1e-6
    assert out[0] == r2.standard_normal()


def test_prior_draws():
    prior = gaussian_prior([2.0], 3.0)
    rng = np.random.default_rng(4)
    draws = np.array([sample_prior_scaled(prior, 1.0, rng)[0] for _ in range(20000)])
    assert draws.var() == pytest.approx(3.0, rel=0.05)
    bare = PriorSpec(prior.log_density, prior.grad_log_density)
    with pytest.raises(ValueError):
        sample_prior_scaled(bare, 1.0, rng)
    f = gaussian_family(1.0)
    lang = np.array([sample_prior_langevin(f, bare, 1.0, rng, n_steps=300)[0] for _ in range(400)])
    # 4 standard errors on 400 draws
    assert lang.mean() == pytest.approx(2.0, abs=4 * math.sqrt(3.0 / 400))
    assert lang.var() == pytest.approx(3.0, rel=4 * math.sqrt(2 / 400))


def _setup(n=20, seed=0, dim=1):
    rng = np.random.default_rng(seed)
    alpha = [1.0] if dim == 1 else [1.0, 0.5]
    f = gaussian_family(1.0, alpha=alpha)
    prior = gaussian_prior(np.zeros(dim), 2.0)
    state = ArmPosteriorState(rng.normal(1.0, 1.0, n))
    return f, prior, state


@pytest.mark.parametrize(
    "cfg",
    [SamplerConfig("ula"), SamplerConfig("sgld"), SamplerConfig.practical("ula"), SamplerConfig.practical("sgld")],
    ids=["ula", "sgld", "ula-practical", "sgld-practical"],
)
@pytest.mark.parametrize("n", [5, 60])
@pytest.mark.parametrize("dim", [1, 2])
def test_compiled_chain_matches_generic(cfg, n, dim):
    f, prior, state = _setup(n, dim=dim)
    state.warm_start = np.full(dim, 0.3)
    fast = run_langevin(state, f, prior, cfg, np.random.default_rng(11))
    slow = run_langevin(state, f, prior, cfg, np.random.default_rng(11), fast=False)
    np.testing.assert_allclose(fast.chain_end, slow.chain_end, rtol=1e-10, atol=1e-12)
    np.testing.assert_allclose(fast.theta, slow.theta, rtol=1e-10, atol=1e-12)
    assert fast.n_grad_evals == slow.n_grad_evals


def test_rng_protocol_ula():
    f, prior, state = _setup(10)
    cfg = SamplerConfig.practical("ula")
    rng = np.random.default_rng(21)
    res = run_langevin(state, f, prior, cfg, rng)
    ref = np.random.default_rng(21)
    draws = ref.standard_normal((101, 1))
    # smoothing uses the last row
    assert res.theta[0] == pytest.approx(res.chain_end[0] + draws[100, 0] * math.sqrt(1 / 10), rel=1e-15)
    assert rng.random() == ref.random()


def test_callback_sees_every_state_and_warm_start_untouched():
    f, prior, state = _setup(10)
    seen = []
    res = run_langevin(state, f, prior, SamplerConfig.practical("ula"), np.random.default_rng(0),
                       callback=lambda i, th: seen.append(i))
    assert seen == list(range(101))
    assert state.warm_start is None
    assert res.n_grad_evals == 100 * 10 + 100


def test_run_langevin_errors():
    f, prior, state = _setup(3)
    with pytest.raises(ValueError):
        run_langevin(state, f, prior, SamplerConfig("exact"), np.random.default_rng(0))
    with pytest.raises(ValueError):
        run_langevin(ArmPosteriorState(), f, prior, SamplerConfig("ula"), np.random.default_rng(0))


def test_warm_started_chain_tracks_posterior():
    # warm-started practical ULA across many rounds keeps its output near the posterior
    f = gaussian_family(1.0)
    prior = gaussian_prior([0.0], 4.0)
    rng = np.random.default_rng(8)
    state = ArmPosteriorState()
    cfg = SamplerConfig.practical("ula")
    ends = []
    for t in range(400):
        state.append(float(rng.normal(2.0, 1.0)))
        res = run_langevin(state, f, prior, cfg, rng)
        state.warm_start = res.chain_end
        ends.append(res.chain_end[0])
    post_mean = (state.sum) / (state.n + 0.25)
    assert abs(ends[-1] - post_mean) < 5 / math.sqrt(state.n)


def test_non_gaussian_family_uses_generic_path():
    g = gaussian_family(1.0)
    f = FamilySpec(1, g.log_likelihood, g.grad_log_likelihood, g.m, g.L, g.nu, g.L_star, g.alpha)
    prior = gaussian_prior([0.0], 1.0)
    state = ArmPosteriorState([1.0, 1.5])
    a = run_langevin(state, f, prior, SamplerConfig.practical("ula"), np.random.default_rng(1))
    b = run_langevin(state, g, prior, SamplerConfig.practical("ula"), np.random.default_rng(1))
    np.testing.assert_allclose(a.theta, b.theta, rtol=1e-10)
