"""Log-concave reward families, priors and true arms.

A family is a value object: closures for the log-likelihood and its
gradient plus the curvature constants the samplers and diagnostics read.
Constants are trusted inputs; nothing here estimates them from data.

Closures take ``theta`` of shape ``(d,)`` and ``x`` either a scalar or a
1-d array of rewards. With an array of ``n`` rewards the log-likelihood
returns shape ``(n,)`` and the gradient shape ``(n, d)``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

__all__ = [
    "InvalidFamilyError",
    "FamilySpec",
    "PriorSpec",
    "TrueArm",
    "condition_number",
    "gaussian_family",
    "gaussian_prior",
    "gaussian_arm",
    "mean_reward",
]


class InvalidFamilyError(ValueError):
    """Raised when family or prior constants violate log-concavity requirements."""


@dataclass(frozen=True)
class FamilySpec:
    """Parametric log-concave likelihood ``p(x | theta)`` with its constants.

    ``m`` and ``L`` bound the curvature of ``-log p`` in theta, ``nu`` is the
    strong log-concavity of the reward density in x, ``L_star`` the
    Lipschitz constant of the theta-gradient in x. ``alpha`` maps a
    parameter to its mean reward.

    ``sigma2`` is set only by :func:`gaussian_family`; samplers use it to
    select a compiled fast path, it plays no role in the contract.
    """

    dim: int
    log_likelihood: Callable
    grad_log_likelihood: Callable
    m: float
    L: float
    nu: float
    L_star: float
    alpha: np.ndarray
    sigma2: Optional[float] = field(default=None, compare=False)

    def __post_init__(self):
        if int(self.dim) != self.dim or self.dim < 1:
            raise InvalidFamilyError(f"dim must be a positive integer, got {self.dim!r}")
        alpha = np.array(self.alpha, dtype=float).reshape(-1)
        if alpha.shape != (self.dim,):
            raise InvalidFamilyError(
                f"alpha has length {alpha.size}, expected dim={self.dim}"
            )
        alpha.setflags(write=False)
        object.__setattr__(self, "alpha", alpha)
        for name in ("m", "L", "nu", "L_star"):
            value = float(getattr(self, name))
            if not value > 0 or not math.isfinite(value):
                raise InvalidFamilyError(f"{name} must be positive and finite, got {value!r}")
            object.__setattr__(self, name, value)

    @property
    def kappa(self) -> float:
        return condition_number(self)

    @property
    def alpha_norm(self) -> float:
        return float(np.linalg.norm(self.alpha))


@dataclass(frozen=True)
class PriorSpec:
    """Log-concave prior known up to an additive constant.

    ``log_B`` is ``max log pi - log pi(theta*)``; only diagnostics read it.
    ``mean`` and ``var`` are filled for isotropic Gaussian priors, which
    unlocks closed-form prior draws and the conjugate posterior.
    """

    log_density: Callable
    grad_log_density: Callable
    log_B: Optional[float] = None
    mean: Optional[np.ndarray] = field(default=None, compare=False)
    var: Optional[float] = field(default=None, compare=False)

    def __post_init__(self):
        if self.log_B is not None and not self.log_B >= 0:
            raise InvalidFamilyError(f"log_B must be nonnegative, got {self.log_B!r}")
        if (self.mean is None) != (self.var is None):
            raise InvalidFamilyError("Gaussian prior needs both mean and var")
        if self.mean is not None:
            mean = np.array(self.mean, dtype=float).reshape(-1)
            mean.setflags(write=False)
            object.__setattr__(self, "mean", mean)
            if not self.var > 0:
                raise InvalidFamilyError(f"prior variance must be positive, got {self.var!r}")
            object.__setattr__(self, "var", float(self.var))

    @property
    def is_gaussian(self) -> bool:
        return self.mean is not None

    def with_log_B(self, theta_star) -> "PriorSpec":
        """Copy of this prior with ``log_B`` computed at ``theta_star``.

        Only available for Gaussian priors, whose maximum is at the mean.
        """
        if not self.is_gaussian:
            raise InvalidFamilyError("log_B is only computable in closed form for Gaussian priors")
        theta_star = np.asarray(theta_star, dtype=float).reshape(-1)
        log_B = float(self.log_density(self.mean) - self.log_density(theta_star))
        return PriorSpec(
            self.log_density, self.grad_log_density, max(log_B, 0.0), self.mean, self.var
        )


@dataclass(frozen=True)
class TrueArm:
    """Ground-truth arm.

    ``reward_mean``/``reward_sd`` are set when each reward is exactly
    ``reward_mean + reward_sd * rng.standard_normal()``; the compiled
    Thompson loop relies on that draw pattern.
    """

    theta_star: np.ndarray
    reward_sampler: Callable[[np.random.Generator], float]
    reward_mean: Optional[float] = field(default=None, compare=False)
    reward_sd: Optional[float] = field(default=None, compare=False)

    def __post_init__(self):
        theta = np.array(self.theta_star, dtype=float).reshape(-1)
        theta.setflags(write=False)
        object.__setattr__(self, "theta_star", theta)


def condition_number(f: FamilySpec) -> float:
    """``max(L/m, L/nu)``."""
    m, L, nu = f.m, f.L, f.nu
    if not (m > 0 and nu > 0):
        raise InvalidFamilyError(f"m and nu must be positive, got m={m!r}, nu={nu!r}")
    return max(L / m, L / nu)


def mean_reward(f: FamilySpec, theta) -> float:
    theta = np.asarray(theta, dtype=float).reshape(-1)
    if theta.shape != (f.dim,):
        raise ValueError(f"theta has length {theta.size}, expected {f.dim}")
    return float(f.alpha @ theta)


def gaussian_family(sigma2: float, alpha=(1.0,)) -> FamilySpec:
    """Gaussian rewards ``x ~ N(alpha^T theta, sigma2)`` with known variance.

    For ``d = 1`` every constant equals ``alpha^2 / sigma2``. For ``d > 1``
    the likelihood is flat orthogonal to ``alpha``; ``m`` then reports the
    curvature along ``alpha``, the only direction the decision rule uses.
    """
    sigma2 = float(sigma2)
    if not sigma2 > 0:
        raise InvalidFamilyError(f"sigma2 must be positive, got {sigma2!r}")
    alpha = np.array(alpha, dtype=float).reshape(-1)
    a2 = float(alpha @ alpha)
    if a2 == 0:
        raise InvalidFamilyError("alpha must be nonzero for a Gaussian family")
    log_norm = 0.5 * math.log(2 * math.pi * sigma2)

    def log_likelihood(theta, x):
        resid = np.asarray(x, dtype=float) - alpha @ np.asarray(theta, dtype=float)
        return -0.5 * resid * resid / sigma2 - log_norm

    def grad_log_likelihood(theta, x):
        resid = np.asarray(x, dtype=float) - alpha @ np.asarray(theta, dtype=float)
        return np.multiply.outer(resid, alpha) / sigma2

    return FamilySpec(
        dim=alpha.size,
        log_likelihood=log_likelihood,
        grad_log_likelihood=grad_log_likelihood,
        m=a2 / sigma2,
        L=a2 / sigma2,
        nu=1.0 / sigma2,
        L_star=math.sqrt(a2) / sigma2,
        alpha=alpha,
        sigma2=sigma2,
    )


def gaussian_prior(mean, var: float, theta_star=None) -> PriorSpec:
    """Isotropic Gaussian prior ``N(mean, var I)``."""
    mean = np.array(mean, dtype=float).reshape(-1)
    var = float(var)
    if not var > 0:
        raise InvalidFamilyError(f"prior variance must be positive, got {var!r}")
    d = mean.size
    log_norm = 0.5 * d * math.log(2 * math.pi * var)

    def log_density(theta):
        diff = np.asarray(theta, dtype=float) - mean
        return float(-0.5 * (diff @ diff) / var - log_norm)

    def grad_log_density(theta):
        return -(np.asarray(theta, dtype=float) - mean) / var

    prior = PriorSpec(log_density, grad_log_density, None, mean, var)
    if theta_star is not None:
        prior = prior.with_log_B(theta_star)
    return prior


def gaussian_arm(theta_star, sigma2: float = 1.0, alpha=None) -> TrueArm:
    """True arm drawing ``N(alpha^T theta*, sigma2)`` rewards."""
    theta_star = np.array(theta_star, dtype=float).reshape(-1)
    alpha = np.ones(1) if alpha is None else np.array(alpha, dtype=float).reshape(-1)
    mu = float(alpha @ theta_star)
    sd = math.sqrt(sigma2)

    def reward_sampler(rng):
        return mu + sd * float(rng.standard_normal())

    return TrueArm(theta_star, reward_sampler, mu, sd)
