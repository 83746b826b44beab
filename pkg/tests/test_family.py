import math

import numpy as np
import pytest

from langevin_ts.family import (
    FamilySpec,
    InvalidFamilyError,
    condition_number,
    gaussian_arm,
    gaussian_family,
    gaussian_prior,
    mean_reward,
)


def _flat(theta, x):
    return np.zeros_like(np.asarray(x, dtype=float))


def test_gaussian_family_constants():
    f = gaussian_family(2.0, alpha=[3.0, 4.0])
    assert f.dim == 2
    assert f.m == f.L == pytest.approx(25 / 2)
    assert f.nu == pytest.approx(0.5)
    assert f.L_star == pytest.approx(5 / 2)
    assert f.alpha_norm == pytest.approx(5.0)


def test_gaussian_log_likelihood_matches_closed_form():
    f = gaussian_family(0.5)
    x = np.array([-1.0, 0.25, 3.0])
    expected = -0.5 * (x - 1.5) ** 2 / 0.5 - 0.5 * math.log(2 * math.pi * 0.5)
    np.testing.assert_allclose(f.log_likelihood(np.array([1.5]), x), expected, rtol=1e-14)


def test_gaussian_gradient_matches_finite_differences():
    f = gaussian_family(1.7, alpha=[0.5, -2.0])
    theta = np.array([0.3, 0.8])
    x = np.array([0.1, -1.2, 2.0])
    grad = f.grad_log_likelihood(theta, x)
    assert grad.shape == (3, 2)
    eps = 1e-6
    for j in range(2):
        e = np.zeros(2)
        e[j] = eps
        fd = (f.log_likelihood(theta + e, x) - f.log_likelihood(theta - e, x)) / (2 * eps)
        np.testing.assert_allclose(grad[:, j], fd, rtol=1e-6, atol=1e-8)


def test_condition_number_is_max_ratio():
    f = FamilySpec(1, _flat, _flat, m=0.5, L=2.0, nu=0.25, L_star=1.0, alpha=[1.0])
    assert condition_number(f) == pytest.approx(8.0)
    assert f.kappa == pytest.approx(8.0)
    assert condition_number(gaussian_family(1.0)) == 1.0


@pytest.mark.parametrize("field,value", [("m", 0.0), ("L", -1.0), ("nu", float("inf")), ("L_star", float("nan"))])
def test_nonpositive_constants_rejected(field, value):
    kwargs = dict(m=1.0, L=1.0, nu=1.0, L_star=1.0)
    kwargs[field] = value
    with pytest.raises(InvalidFamilyError):
        FamilySpec(1, _flat, _flat, alpha=[1.0], **kwargs)


def test_alpha_dimension_checked():
    with pytest.raises(InvalidFamilyError):
        FamilySpec(2, _flat, _flat, 1.0, 1.0, 1.0, 1.0, alpha=[1.0])


def test_invalid_family_error_is_value_error():
    with pytest.raises(ValueError):
        gaussian_family(0.0)


def test_prior_log_B_oracle():
    # log B = log pi(mean) - log pi(theta*) = |theta* - mean|^2 / (2 var)
    prior = gaussian_prior([1.0, -1.0], 4.0, theta_star=[3.0, 0.0])
    assert prior.log_B == pytest.approx((4.0 + 1.0) / 8.0)
    assert gaussian_prior([2.0], 1.0, theta_star=[2.0]).log_B == 0.0


def test_prior_gradient():
    prior = gaussian_prior([1.0], 2.0)
    np.testing.assert_allclose(prior.grad_log_density(np.array([3.0])), [-1.0])


def test_mean_reward_and_dimension_mismatch():
    f = gaussian_family(1.0, alpha=[1.0, 2.0])
    assert mean_reward(f, [1.0, 1.0]) == 3.0
    with pytest.raises(ValueError):
        mean_reward(f, [1.0])


def test_gaussian_arm_samples():
    arm = gaussian_arm([2.0], sigma2=4.0)
    rng = np.random.default_rng(0)
    draws = np.array([arm.reward_sampler(rng) for _ in range(20000)])
    assert arm.reward_mean == 2.0 and arm.reward_sd == 2.0
    assert abs(draws.mean() - 2.0) < 4 * 2.0 / math.sqrt(20000)
    assert abs(draws.std() - 2.0) < 0.05
    # the sampler is exactly mean + sd * standard_normal
    r1 = np.random.default_rng(5)
    r2 = np.random.default_rng(5)
    assert arm.reward_sampler(r1) == 2.0 + 2.0 * r2.standard_normal()
