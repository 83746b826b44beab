"""Single-arm posterior samplers with a scikit-learn style interface.

``fit`` replaces the observed rewards, ``partial_fit`` appends to them and
``sample`` draws parameters from the scaled posterior.
"""
from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator
from sklearn.utils.validation import check_is_fitted

from .family import FamilySpec, PriorSpec
from .posterior import ArmPosteriorState
from .policies import exact_posterior
from .samplers import SamplerConfig, SamplerKind, run_langevin, sample_exact_scaled
from .validation import check_positive, check_rewards

__all__ = ["ExactPosteriorSampler", "LangevinPosteriorSampler"]


class _PosteriorSampler(BaseEstimator):
    def fit(self, X, y=None):
        self._validate()
        self.state_ = ArmPosteriorState(check_rewards(X))
        self.rng_ = np.random.default_rng(self.random_state)
        return self

    def partial_fit(self, X, y=None):
        if not hasattr(self, "state_"):
            return self.fit(X)
        for x in check_rewards(X):
            self.state_.append(float(x))
        return self

    @property
    def n_observations_(self) -> int:
        check_is_fitted(self, "state_")
        return self.state_.n

    def _validate(self):
        if not isinstance(self.family, FamilySpec):
            raise TypeError("family must be a FamilySpec")
        if not isinstance(self.prior, PriorSpec):
            raise TypeError("prior must be a PriorSpec")
        check_positive("gamma", self.gamma)


class ExactPosteriorSampler(_PosteriorSampler):
    """Closed-form sampler for a 1-d Gaussian family with a Gaussian prior."""

    def __init__(self, family=None, prior=None, gamma=1.0, random_state=None):
        self.family = family
        self.prior = prior
        self.gamma = gamma
        self.random_state = random_state

    def _validate(self):
        super()._validate()
        if self.family.sigma2 is None or self.family.dim != 1 or not self.prior.is_gaussian:
            raise ValueError("exact sampling needs a 1-d Gaussian family and a Gaussian prior")

    def posterior(self):
        check_is_fitted(self, "state_")
        return exact_posterior(self.state_, self.family, self.prior)

    def sample(self, n_samples: int = 1) -> np.ndarray:
        post = self.posterior()
        n_samples = check_positive("n_samples", n_samples, integer=True)
        return np.stack([sample_exact_scaled(post, self.gamma, self.rng_) for _ in range(n_samples)])


class LangevinPosteriorSampler(_PosteriorSampler):
    """Warm-started ULA or SGLD sampler.

    Successive draws continue from the previous chain end, as in a
    bandit run. ``schedule="practical"`` uses the fixed short schedule.
    """

    def __init__(self, family=None, prior=None, kind="ula", gamma=1.0, schedule="theoretical", random_state=None):
        self.family = family
        self.prior = prior
        self.kind = kind
        self.gamma = gamma
        self.schedule = schedule
        self.random_state = random_state

    def _config(self) -> SamplerConfig:
        kind = SamplerKind(self.kind)
        if kind not in (SamplerKind.ULA, SamplerKind.SGLD):
            raise ValueError(f"kind must be 'ula' or 'sgld', got {self.kind!r}")
        if self.schedule == "practical":
            return SamplerConfig.practical(kind, self.gamma)
        if self.schedule != "theoretical":
            raise ValueError(f"schedule must be 'theoretical' or 'practical', got {self.schedule!r}")
        return SamplerConfig(kind, gamma=self.gamma)

    def fit(self, X, y=None):
        super().fit(X)
        self.config_ = self._config()
        return self

    def sample(self, n_samples: int = 1) -> np.ndarray:
        check_is_fitted(self, "state_")
        n_samples = check_positive("n_samples", n_samples, integer=True)
        if self.state_.n == 0:
            raise ValueError("Langevin sampling needs at least one observation")
        out = np.empty((n_samples, self.family.dim))
        for i in range(n_samples):
            res = run_langevin(self.state_, self.family, self.prior, self.config_, self.rng_)
            self.state_.warm_start = res.chain_end
            out[i] = res.theta
        return out
