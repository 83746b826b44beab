"""Round-level bandit policies: Thompson sampling, horizon-tuned UCB, regret.

Arms are indexed from 0. ``rng`` arguments accept either a single
Generator or a sequence holding one Generator per arm; per-arm streams
keep one arm's sampler consumption from shifting another arm's draws.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np
from sklearn.base import BaseEstimator

from .family import FamilySpec, PriorSpec, TrueArm
from .posterior import ArmPosteriorState, GaussianPosterior
from .samplers import (
    SamplerConfig,
    hyperparams,
    SamplerKind,
    Schedule,
    run_langevin,
    sample_adversarial_mixture,
    sample_exact_scaled,
    sample_prior_langevin,
    sample_prior_scaled,
)
from .validation import arm_generators, check_positive

__all__ = [
    "Arm",
    "BanditInstance",
    "RegretTrace",
    "exact_posterior",
    "thompson_round",
    "ucb_round",
    "regret_trace",
    "ThompsonSampling",
    "UCB",
]


@dataclass(frozen=True)
class Arm:
    family: FamilySpec
    prior: PriorSpec
    true: TrueArm

    @property
    def mean(self) -> float:
        return float(self.family.alpha @ self.true.theta_star)


@dataclass(frozen=True)
class BanditInstance:
    arms: tuple
    horizon: int
    name: str = "custom"

    def __post_init__(self):
        arms = tuple(a if isinstance(a, Arm) else Arm(*a) for a in self.arms)
        if len(arms) < 2:
            raise ValueError("a bandit instance needs at least 2 arms")
        if int(self.horizon) != self.horizon or self.horizon < 0:
            raise ValueError(f"horizon must be a nonnegative integer, got {self.horizon!r}")
        object.__setattr__(self, "arms", arms)

    @property
    def n_arms(self) -> int:
        return len(self.arms)

    @property
    def means(self) -> np.ndarray:
        return np.array([a.mean for a in self.arms])

    @property
    def gaps(self) -> np.ndarray:
        means = self.means
        return means.max() - means


@dataclass
class RegretTrace:
    chosen: np.ndarray
    rewards: np.ndarray
    cum_regret: np.ndarray
    failed: Optional[str] = field(default=None)

    def __len__(self):
        return len(self.chosen)

    @property
    def final_regret(self) -> float:
        return float(self.cum_regret[-1]) if len(self.cum_regret) else 0.0


def _arm_rng(rng, a: int) -> np.random.Generator:
    return rng if isinstance(rng, np.random.Generator) else rng[a]


def exact_posterior(state: ArmPosteriorState, f: FamilySpec, prior: PriorSpec) -> GaussianPosterior:
    """Conjugate posterior for a 1-d Gaussian family ``x ~ N(alpha theta, sigma2)``."""
    if f.sigma2 is None or not prior.is_gaussian or f.dim != 1:
        raise ValueError("exact sampling needs a 1-d Gaussian family with a Gaussian prior")
    a = f.alpha[0]
    precision = 1.0 / prior.var + state.n * a * a / f.sigma2
    mean = (prior.mean / prior.var + a * state.sum / f.sigma2) / precision
    return GaussianPosterior(mean, precision)


def _sample_arm(arm: Arm, state: ArmPosteriorState, cfg: SamplerConfig, rng) -> np.ndarray:
    f, prior = arm.family, arm.prior
    if state.n == 0:
        if prior.is_gaussian:
            return sample_prior_scaled(prior, cfg.gamma, rng)
        if cfg.kind in (SamplerKind.EXACT, SamplerKind.MIXTURE):
            raise ValueError("exact sampling needs a Gaussian prior")
        return sample_prior_langevin(f, prior, cfg.gamma, rng)
    if cfg.kind is SamplerKind.EXACT:
        return sample_exact_scaled(exact_posterior(state, f, prior), cfg.gamma, rng)
    if cfg.kind is SamplerKind.MIXTURE:
        return sample_adversarial_mixture(
            exact_posterior(state, f, prior), state.n, cfg.mixture_alpha, cfg.mixture_atom, rng
        )
    outcome = run_langevin(state, f, prior, cfg, rng)
    state.warm_start = outcome.chain_end
    return outcome.theta


def thompson_round(
    instance: BanditInstance,
    states: Sequence[ArmPosteriorState],
    cfgs: Sequence[SamplerConfig],
    rng,
    reward_rng=None,
) -> tuple[int, float]:
    """Sample every arm, pull the argmax of ``alpha^T theta`` and record its reward.

    Ties go to the lowest index. Langevin arms store their chain end as
    the next warm start whether or not they are pulled.
    """
    if len(cfgs) != instance.n_arms or len(states) != instance.n_arms:
        raise ValueError("need one state and one sampler config per arm")
    scores = np.empty(instance.n_arms)
    for a, arm in enumerate(instance.arms):
        theta = _sample_arm(arm, states[a], cfgs[a], _arm_rng(rng, a))
        scores[a] = arm.family.alpha @ theta
    chosen = int(np.argmax(scores))
    reward_source = rng if reward_rng is None else reward_rng
    reward = float(instance.arms[chosen].true.reward_sampler(_arm_rng(reward_source, chosen)))
    states[chosen].append(reward)
    return chosen, reward


def ucb_round(instance: BanditInstance, counts, sums, t: int, T: int, sigma2: float, rng) -> tuple[int, float]:
    """One round of UCB with bonus ``sqrt(4 sigma2 log(2T) / T_a)``.

    ``t`` counts rounds from 1; rounds ``1..K`` pull each arm once.
    ``counts`` and ``sums`` are updated in place.
    """
    if t < 1:
        raise ValueError("rounds are numbered from 1")
    K = instance.n_arms
    if t <= K:
        chosen = t - 1
    else:
        counts_f = np.asarray(counts, dtype=float)
        index = np.asarray(sums, dtype=float) / counts_f + np.sqrt(4 * sigma2 * math.log(2 * T) / counts_f)
        chosen = int(np.argmax(index))
    reward = float(instance.arms[chosen].true.reward_sampler(_arm_rng(rng, chosen)))
    counts[chosen] += 1
    sums[chosen] += reward
    return chosen, reward


def regret_trace(instance: BanditInstance, chosen, rewards=None) -> RegretTrace:
    """Cumulative pseudo-regret from true-mean gaps."""
    chosen = np.asarray(chosen, dtype=np.intp).reshape(-1)
    if chosen.size and (chosen.min() < 0 or chosen.max() >= instance.n_arms):
        raise ValueError("chosen arm out of range")
    cum = np.cumsum(instance.gaps[chosen]) if chosen.size else np.zeros(0)
    rewards = np.full(chosen.size, np.nan) if rewards is None else np.asarray(rewards, dtype=float)
    return RegretTrace(chosen, rewards, cum)


class _BanditPolicy(BaseEstimator):
    """Shared fit loop. Subclasses implement ``_start`` and ``_round``."""

    def fit(self, instance: BanditInstance, horizon: Optional[int] = None):
        T = instance.horizon if horizon is None else horizon
        if int(T) != T or T < 0:
            raise ValueError(f"horizon must be a nonnegative integer, got {T!r}")
        K = instance.n_arms
        sampler_rngs = arm_generators(self.random_state, K, tag=0)
        reward_seed = self.reward_random_state
        reward_rngs = arm_generators(
            self.random_state if reward_seed is None else reward_seed,
            K,
            tag=1 if reward_seed is None else 0,
        )
        self._start(instance, T)
        compiled = self._run_compiled(instance, T, sampler_rngs, reward_rngs)
        if compiled is not None:
            chosen, rewards = compiled
        else:
            chosen = np.empty(T, dtype=np.intp)
            rewards = np.empty(T)
            for t in range(T):
                chosen[t], rewards[t] = self._round(instance, t + 1, T, sampler_rngs, reward_rngs)
        self.trace_ = regret_trace(instance, chosen, rewards)
        self.n_pulls_ = np.bincount(chosen, minlength=K)
        return self

    def _run_compiled(self, instance, T, sampler_rngs, reward_rngs):
        return None


class ThompsonSampling(_BanditPolicy):
    """Thompson sampling with exact, Langevin or corrupted per-arm samplers.

    Parameters
    ----------
    sampler : {"exact", "ula", "sgld", "mixture"}
        Sampler for every arm; with ``"mixture"`` only ``corrupted_arms``
        use the point-mass mixture and the rest sample exactly.
    gamma : float
        Posterior scale.
    schedule : {"practical", "theoretical"}
        Step size / iteration / batch rule for the Langevin samplers.
    mixture_alpha, mixture_atom, corrupted_arms
        Mixture sampler settings.
    random_state, reward_random_state
        Seeds for sampler streams and reward streams. Rewards default to a
        stream derived from ``random_state``.
    engine : {"auto", "python"}
        ``"auto"`` runs 1-d Gaussian instances with exact, mixture or ULA
        samplers in a compiled loop that reproduces the interpreted one
        draw for draw; ``"python"`` always interprets.
    """

    def __init__(
        self,
        sampler="exact",
        gamma=1.0,
        schedule="practical",
        mixture_alpha=None,
        mixture_atom=None,
        corrupted_arms=(1,),
        random_state=None,
        reward_random_state=None,
        engine="auto",
    ):
        self.sampler = sampler
        self.gamma = gamma
        self.schedule = schedule
        self.mixture_alpha = mixture_alpha
        self.mixture_atom = mixture_atom
        self.corrupted_arms = corrupted_arms
        self.random_state = random_state
        self.reward_random_state = reward_random_state
        self.engine = engine

    def sampler_configs(self, n_arms: int) -> list[SamplerConfig]:
        kind = SamplerKind(self.sampler)
        gamma = check_positive("gamma", self.gamma)
        schedule = Schedule(self.schedule)
        if kind is SamplerKind.MIXTURE:
            corrupted = set(self.corrupted_arms)
            mixture = SamplerConfig(
                kind, gamma=gamma, mixture_alpha=self.mixture_alpha, mixture_atom=self.mixture_atom
            )
            exact = SamplerConfig(SamplerKind.EXACT, gamma=gamma)
            return [mixture if a in corrupted else exact for a in range(n_arms)]
        if schedule is Schedule.PRACTICAL:
            cfg = SamplerConfig.practical(kind, gamma)
        else:
            cfg = SamplerConfig(kind, gamma=gamma)
        return [cfg] * n_arms

    def _start(self, instance, T):
        self.configs_ = self.sampler_configs(instance.n_arms)
        self.states_ = [ArmPosteriorState() for _ in range(instance.n_arms)]

    def _round(self, instance, t, T, sampler_rngs, reward_rngs):
        return thompson_round(instance, self.states_, self.configs_, sampler_rngs, reward_rngs)

    def _compilable(self, instance) -> bool:
        if self.engine not in ("auto", "python"):
            raise ValueError(f"engine must be 'auto' or 'python', got {self.engine!r}")
        if self.engine == "python":
            return False
        kinds = {SamplerKind.EXACT, SamplerKind.MIXTURE, SamplerKind.ULA}
        return all(
            cfg.kind in kinds
            and arm.family.sigma2 is not None
            and arm.family.dim == 1
            and arm.prior.is_gaussian
            and arm.true.reward_sd is not None
            for arm, cfg in zip(instance.arms, self.configs_)
        )

    def _run_compiled(self, instance, T, sampler_rngs, reward_rngs):
        if T == 0 or not self._compilable(instance):
            return None
        from . import _kernels

        codes = {
            SamplerKind.EXACT: _kernels.EXACT,
            SamplerKind.MIXTURE: _kernels.MIXTURE,
            SamplerKind.ULA: _kernels.ULA,
        }
        arms, cfgs = instance.arms, self.configs_
        K = len(arms)
        ula = [a for a in range(K) if cfgs[a].kind is SamplerKind.ULA]
        width = T + 1 if ula else 1
        h_table = np.zeros((K, width))
        n_table = np.zeros((K, width), dtype=np.int64)
        cache = {}
        for a in ula:
            key = (id(cfgs[a]), id(arms[a].family))
            if key not in cache:
                rows = [hyperparams(cfgs[a], arms[a].family, n) for n in range(1, width)]
                cache[key] = (np.array([r[0] for r in rows]), np.array([r[1] for r in rows]))
            h_table[a, 1:], n_table[a, 1:] = cache[key]
        col = lambda fn: np.array([float(fn(arm, cfg)) for arm, cfg in zip(arms, cfgs)])
        chosen, rewards, warm, has_warm = _kernels.conjugate_run(
            np.array([codes[c.kind] for c in cfgs], dtype=np.int64),
            col(lambda arm, cfg: cfg.gamma),
            col(lambda arm, cfg: arm.prior.mean[0]),
            col(lambda arm, cfg: arm.prior.var),
            col(lambda arm, cfg: arm.family.sigma2),
            col(lambda arm, cfg: arm.family.alpha[0]),
            col(lambda arm, cfg: arm.family.L),
            col(lambda arm, cfg: arm.true.reward_mean),
            col(lambda arm, cfg: arm.true.reward_sd),
            col(lambda arm, cfg: cfg.mixture_alpha or 1.0),
            col(lambda arm, cfg: 0.0 if cfg.mixture_atom is None else cfg.mixture_atom[0]),
            h_table,
            n_table,
            tuple(sampler_rngs),
            tuple(reward_rngs),
            T,
        )
        chosen = chosen.astype(np.intp)
        for a in range(K):
            state = ArmPosteriorState(rewards[chosen == a])
            if has_warm[a]:
                state.warm_start = np.array([warm[a]])
            self.states_[a] = state
        return chosen, rewards


class UCB(_BanditPolicy):
    """Horizon-tuned UCB with known reward variance ``sigma2``.

    When ``sigma2`` is None it is read from the first arm's family.
    """

    def __init__(self, sigma2=None, random_state=None, reward_random_state=None):
        self.sigma2 = sigma2
        self.random_state = random_state
        self.reward_random_state = reward_random_state

    def _start(self, instance, T):
        if self.sigma2 is None:
            sigma2 = instance.arms[0].family.sigma2
            if sigma2 is None:
                raise ValueError("sigma2 is required for non-Gaussian families")
        else:
            sigma2 = self.sigma2
        self.sigma2_ = check_positive("sigma2", sigma2)
        self.counts_ = np.zeros(instance.n_arms, dtype=np.int64)
        self.sums_ = np.zeros(instance.n_arms)

    def _round(self, instance, t, T, sampler_rngs, reward_rngs):
        return ucb_round(instance, self.counts_, self.sums_, t, T, self.sigma2_, reward_rngs)
