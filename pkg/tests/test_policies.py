import math

import numpy as np
import pytest
from sklearn.base import clone

from langevin_ts.family import TrueArm, gaussian_arm, gaussian_family, gaussian_prior
from langevin_ts.harness import builtin_instance, counterexample_instance
from langevin_ts.policies import (
    UCB,
    Arm,
    BanditInstance,
    ThompsonSampling,
    exact_posterior,
    regret_trace,
    thompson_round,
    ucb_round,
)
from langevin_ts.posterior import ArmPosteriorState
from langevin_ts.samplers import SamplerConfig


def _instance(means, prior_means=None, horizon=50):
    f = gaussian_family(1.0)
    prior_means = prior_means or [0.0] * len(means)
    return BanditInstance(
        tuple(Arm(f, gaussian_prior([pm], 1.0), gaussian_arm([m])) for m, pm in zip(means, prior_means)), horizon
    )


def _fixed_arm(mu, value):
    return TrueArm([mu], lambda rng: value)


def test_instance_validation_and_gaps():
    inst = _instance([1.0, 3.0, 2.0])
    np.testing.assert_array_equal(inst.gaps, [2.0, 0.0, 1.0])
    assert inst.n_arms == 3
    with pytest.raises(ValueError):
        _instance([1.0])
    with pytest.raises(ValueError):
        BanditInstance(_instance([1.0, 2.0]).arms, -1)


def test_regret_trace_oracle():
    inst = _instance([1.0, 3.0, 2.0])
    tr = regret_trace(inst, [0, 1, 2, 0])
    np.testing.assert_array_equal(tr.cum_regret, [2.0, 2.0, 3.0, 5.0])
    assert tr.final_regret == 5.0 and len(tr) == 4
    assert regret_trace(inst, []).final_regret == 0.0
    with pytest.raises(ValueError):
        regret_trace(inst, [3])


def test_exact_posterior_requires_gaussian():
    f = gaussian_family(1.0, alpha=[1.0, 1.0])
    with pytest.raises(ValueError):
        exact_posterior(ArmPosteriorState([1.0]), f, gaussian_prior([0.0, 0.0], 1.0))


def test_ucb_forced_exploration_then_index():
    f = gaussian_family(1.0)
    arms = tuple(Arm(f, gaussian_prior([0.0], 1.0), _fixed_arm(m, v)) for m, v in [(0, 0.0), (1, 1.0), (2, 0.5)])
    inst = BanditInstance(arms, 10)
    counts, sums = np.zeros(3, int), np.zeros(3)
    rng = np.random.default_rng(0)
    assert [ucb_round(inst, counts, sums, t, 10, 1.0, rng)[0] for t in (1, 2, 3)] == [0, 1, 2]
    # after one pull each the indices are value + sqrt(4 log 20): arm 1 wins
    assert ucb_round(inst, counts, sums, 4, 10, 1.0, rng)[0] == 1
    # hand oracle for round 5: arm 1 has 2 pulls, mean 1
    bonus1 = math.sqrt(4 * math.log(20) / 2)
    bonus = math.sqrt(4 * math.log(20) / 1)
    expected = int(np.argmax([0.0 + bonus, 1.0 + bonus1, 0.5 + bonus]))
    assert ucb_round(inst, counts, sums, 5, 10, 1.0, rng)[0] == expected
    with pytest.raises(ValueError):
        ucb_round(inst, counts, sums, 0, 10, 1.0, rng)


def test_thompson_round_ties_go_to_lowest_index():
    f = gaussian_family(1.0)
    arms = tuple(Arm(f, gaussian_prior([0.0], 1.0), _fixed_arm(0.0, 0.0)) for _ in range(3))
    inst = BanditInstance(arms, 1)
    cfg = SamplerConfig("mixture", mixture_alpha=1.0, mixture_atom=[5.0])
    states = [ArmPosteriorState([1.0]) for _ in range(3)]
    arm, reward = thompson_round(inst, states, [cfg] * 3, np.random.default_rng(0))
    assert arm == 0 and reward == 0.0 and states[0].n == 2
    with pytest.raises(ValueError):
        thompson_round(inst, states, [cfg] * 2, np.random.default_rng(0))


def test_policies_are_sklearn_estimators():
    ts = ThompsonSampling("ula", gamma=0.5, random_state=3)
    params = ts.get_params()
    assert params["sampler"] == "ula" and params["gamma"] == 0.5
    c = clone(ts)
    assert c.get_params() == params
    assert UCB(sigma2=2.0).get_params()["sigma2"] == 2.0


@pytest.mark.parametrize(
    "kw",
    [
        dict(sampler="exact"),
        dict(sampler="exact", gamma=0.3),
        dict(sampler="ula"),
        dict(sampler="ula", schedule="theoretical"),
        dict(sampler="mixture", mixture_alpha=0.5, mixture_atom=[20.0], corrupted_arms=(3,)),
    ],
)
def test_compiled_engine_matches_interpreter(kw):
    inst = builtin_instance("good")
    a = ThompsonSampling(random_state=3, **kw).fit(inst, 400)
    b = ThompsonSampling(random_state=3, engine="python", **kw).fit(inst, 400)
    np.testing.assert_array_equal(a.trace_.chosen, b.trace_.chosen)
    np.testing.assert_array_equal(a.trace_.rewards, b.trace_.rewards)
    for sa, sb in zip(a.states_, b.states_):
        np.testing.assert_array_equal(sa.data, sb.data)
        if sb.warm_start is None:
            assert sa.warm_start is None
        else:
            np.testing.assert_allclose(sa.warm_start, sb.warm_start, rtol=1e-12)


def test_engine_validation():
    with pytest.raises(ValueError):
        ThompsonSampling(engine="gpu").fit(builtin_instance("good"), 5)


def test_fit_is_reproducible_and_seed_sensitive():
    inst = builtin_instance("agnostic")
    for sampler in ("exact", "sgld"):
        a = ThompsonSampling(sampler, random_state=1).fit(inst, 200).trace_
        b = ThompsonSampling(sampler, random_state=1).fit(inst, 200).trace_
        c = ThompsonSampling(sampler, random_state=2).fit(inst, 200).trace_
        np.testing.assert_array_equal(a.chosen, b.chosen)
        assert not np.array_equal(a.rewards, c.rewards)


def test_reward_stream_shared_across_policies():
    # with a common reward seed, the first reward of an arm is the same whichever policy pulls it
    inst = builtin_instance("good")
    ucb = UCB(random_state=1, reward_random_state=99).fit(inst, 10).trace_
    ts = ThompsonSampling(random_state=5, reward_random_state=99).fit(inst, 50).trace_
    first = {}
    for arm, r in zip(ts.chosen, ts.rewards):
        first.setdefault(int(arm), r)
    for arm, r in zip(ucb.chosen, ucb.rewards):
        if int(arm) in first:
            assert first[int(arm)] == r


def test_ucb_pulls_each_arm_once_first():
    inst = builtin_instance("good")
    tr = UCB(random_state=0).fit(inst, 30).trace_
    np.testing.assert_array_equal(tr.chosen[:10], np.arange(10))


def test_zero_horizon():
    inst = builtin_instance("good")
    for pol in (ThompsonSampling(random_state=0), UCB(random_state=0)):
        tr = pol.fit(inst, 0).trace_
        assert len(tr) == 0 and tr.final_regret == 0.0


def test_ts_finds_best_arm():
    inst = counterexample_instance()
    for sampler in ("exact", "ula", "sgld"):
        pol = ThompsonSampling(sampler, random_state=0).fit(inst, 1500)
        assert pol.n_pulls_[0] > 0.95 * 1500


def test_fit_rejects_bad_horizon():
    with pytest.raises(ValueError):
        ThompsonSampling().fit(builtin_instance("good"), -1)
    with pytest.raises(ValueError):
        ThompsonSampling(gamma=-1.0).fit(builtin_instance("good"), 5)


def test_ucb_needs_sigma2_for_non_gaussian():
    g = gaussian_family(1.0)
    from langevin_ts.family import FamilySpec

    f = FamilySpec(1, g.log_likelihood, g.grad_log_likelihood, 1.0, 1.0, 1.0, 1.0, [1.0])
    arms = tuple(Arm(f, gaussian_prior([0.0], 1.0), gaussian_arm([m])) for m in (0.0, 1.0))
    with pytest.raises(ValueError):
        UCB().fit(BanditInstance(arms, 5))
    assert UCB(sigma2=1.0, random_state=0).fit(BanditInstance(arms, 5)).trace_.chosen.size == 5
