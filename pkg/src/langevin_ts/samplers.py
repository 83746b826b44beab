"""Per-arm parameter samplers for Thompson sampling.

Exact sampling draws from the gamma-tempered conjugate posterior. The
Langevin samplers run a warm-started ULA or SGLD chain on the unscaled
posterior and perturb the chain end with ``N(0, I / (n L gamma))``.

Random draws for one Langevin call happen in a fixed order: step noise
``(N, d)``, smoothing noise ``(d,)``, then ``N * k`` uint32 batch words
(raw 64-bit draws split in two) only when SGLD subsamples (``k < n``).
"""
from __future__ import annotations

import enum
import functools
import math
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from .family import FamilySpec, PriorSpec, condition_number
from .posterior import (
    ArmPosteriorState,
    GaussianPosterior,
    batch_from_bits,
    grad_potential,
    prior_mode,
    stochastic_grad_potential,
)

__all__ = [
    "SamplerKind",
    "Schedule",
    "SamplerConfig",
    "SampleOutcome",
    "InverseLinearStep",
    "CappedBatch",
    "ula_step",
    "theoretical_hyperparams_ula",
    "theoretical_hyperparams_sgld",
    "hyperparams",
    "run_langevin",
    "sample_exact_scaled",
    "sample_adversarial_mixture",
    "sample_prior_scaled",
    "exact_ts_gamma",
    "approx_ts_gamma",
]


class SamplerKind(str, enum.Enum):
    EXACT = "exact"
    ULA = "ula"
    SGLD = "sgld"
    MIXTURE = "mixture"


class Schedule(str, enum.Enum):
    THEORETICAL = "theoretical"
    PRACTICAL = "practical"


@dataclass(frozen=True)
class InverseLinearStep:
    """Step size ``scale / n``."""

    scale: float = 1.0 / 32

    def __call__(self, n: int) -> float:
        return self.scale / n


@dataclass(frozen=True)
class CappedBatch:
    """Batch size ``min(n, cap)``."""

    cap: int = 32

    def __call__(self, n: int) -> int:
        return min(n, self.cap)


@dataclass(frozen=True)
class SamplerConfig:
    kind: SamplerKind
    gamma: float = 1.0
    schedule: Schedule = Schedule.THEORETICAL
    n_steps_override: Optional[int] = None
    step_size_rule: Optional[Callable[[int], float]] = None
    batch_rule: Optional[Callable[[int], int]] = None
    mixture_alpha: Optional[float] = None
    mixture_atom: Optional[np.ndarray] = None

    def __post_init__(self):
        object.__setattr__(self, "kind", SamplerKind(self.kind))
        object.__setattr__(self, "schedule", Schedule(self.schedule))
        if not self.gamma > 0:
            raise ValueError(f"gamma must be positive, got {self.gamma!r}")
        overrides = (self.n_steps_override, self.step_size_rule, self.batch_rule)
        if self.schedule is Schedule.THEORETICAL:
            if any(o is not None for o in overrides):
                raise ValueError("theoretical schedule takes no overrides")
        elif self.kind in (SamplerKind.ULA, SamplerKind.SGLD):
            if self.n_steps_override is None or self.step_size_rule is None:
                raise ValueError("practical schedule needs n_steps_override and step_size_rule")
            if self.n_steps_override < 1:
                raise ValueError("n_steps_override must be positive")
            if self.kind is SamplerKind.SGLD and self.batch_rule is None:
                raise ValueError("practical SGLD needs batch_rule")
        if self.kind is SamplerKind.MIXTURE:
            if self.mixture_alpha is None or not 0 < self.mixture_alpha <= 1:
                raise ValueError(f"mixture_alpha must lie in (0, 1], got {self.mixture_alpha!r}")
            if self.mixture_atom is None:
                raise ValueError("mixture sampler needs mixture_atom")
            object.__setattr__(
                self, "mixture_atom", np.array(self.mixture_atom, dtype=float).reshape(-1)
            )

    @classmethod
    def practical(cls, kind, gamma: float = 1.0) -> "SamplerConfig":
        """Defaults used for the benchmark figures: N=100 for ULA, 200 for SGLD,
        step ``1/(32 n)``, batch ``min(n, 32)``."""
        kind = SamplerKind(kind)
        if kind not in (SamplerKind.ULA, SamplerKind.SGLD):
            return cls(kind, gamma=gamma)
        return cls(
            kind,
            gamma=gamma,
            schedule=Schedule.PRACTICAL,
            n_steps_override=100 if kind is SamplerKind.ULA else 200,
            step_size_rule=InverseLinearStep(1.0 / 32),
            batch_rule=CappedBatch(32) if kind is SamplerKind.SGLD else None,
        )


@dataclass(frozen=True)
class SampleOutcome:
    theta: np.ndarray
    chain_end: np.ndarray
    n_grad_evals: int = 0


def ula_step(theta, grad, h: float, noise) -> np.ndarray:
    if not h > 0:
        raise ValueError(f"step size must be positive, got {h!r}")
    return np.asarray(theta, dtype=float) - h * np.asarray(grad, dtype=float) + math.sqrt(2 * h) * np.asarray(noise, dtype=float)


def _ceil(x: float) -> int:
    # Guard against 2560.0000000000005 style round-off before ceiling.
    return math.ceil(x * (1 - 1e-12))


def _step_size(f: FamilySpec, n: int) -> float:
    L_hat = f.L + f.L / n
    return f.m / (32 * n * L_hat**2)


def theoretical_hyperparams_ula(f: FamilySpec, n: int) -> tuple[float, int]:
    if n < 1:
        raise ValueError("n must be at least 1")
    return _step_size(f, n), _ceil(640 * (f.L + f.L / n) ** 2 / f.m**2)


def theoretical_hyperparams_sgld(f: FamilySpec, n: int) -> tuple[float, int, int]:
    """Step size, iteration count and batch size for SGLD.

    The iteration count is evaluated at ``min(n, k0)`` with ``k0`` the
    unclamped batch size, so it stops changing once ``n >= k0``. This never
    takes fewer steps than ``1280 (L + L/n)^2 / m^2``.
    """
    if n < 1:
        raise ValueError("n must be at least 1")
    k0 = _ceil(32 * f.L_star**2 / (f.m * f.nu))
    n_eff = min(n, k0)
    n_steps = _ceil(1280 * (f.L + f.L / n_eff) ** 2 / f.m**2)
    return _step_size(f, n), n_steps, min(n, k0)


def hyperparams(cfg: SamplerConfig, f: FamilySpec, n: int) -> tuple[float, int, int]:
    """``(h, N, k)`` for a Langevin run on ``n`` observations; ``k = n`` for ULA."""
    if cfg.schedule is Schedule.PRACTICAL:
        h = float(cfg.step_size_rule(n))
        k = min(int(cfg.batch_rule(n)), n) if cfg.kind is SamplerKind.SGLD else n
        return h, int(cfg.n_steps_override), max(k, 1)
    if cfg.kind is SamplerKind.SGLD:
        return theoretical_hyperparams_sgld(f, n)
    h, n_steps = theoretical_hyperparams_ula(f, n)
    return h, n_steps, n


_NO_BITS = np.empty((0, 0), dtype=np.uint32)


def _batch_bits(rng: np.random.Generator, n_steps: int, k: int) -> np.ndarray:
    words = n_steps * k
    raw = rng.bit_generator.random_raw((words + 1) // 2)
    return raw.view(np.uint32)[:words].reshape(n_steps, k)


@functools.lru_cache(maxsize=None)
def _kernels():
    # numba compilation is deferred until a Gaussian chain actually runs.
    from . import _kernels

    return _kernels


def run_langevin(
    state: ArmPosteriorState,
    f: FamilySpec,
    prior: PriorSpec,
    cfg: SamplerConfig,
    rng: np.random.Generator,
    callback: Optional[Callable[[int, np.ndarray], None]] = None,
    fast: bool = True,
) -> SampleOutcome:
    """One round of Langevin sampling for an arm with ``n >= 1`` observations.

    The chain starts at ``state.warm_start`` (or the prior mode) and is not
    written back; callers store ``chain_end`` as the next warm start.
    ``callback(i, theta)`` sees every chain state ``i = 0..N`` and forces
    the generic path. ``fast=False`` forces it too.
    """
    if cfg.kind not in (SamplerKind.ULA, SamplerKind.SGLD):
        raise ValueError(f"run_langevin needs a ULA or SGLD config, got {cfg.kind.value}")
    n = state.n
    if n == 0:
        raise ValueError("no observations; draw from the prior instead")
    h, n_steps, k = hyperparams(cfg, f, n)
    d = f.dim
    theta = state.warm_start if state.warm_start is not None else prior_mode(f, prior)
    theta = np.array(theta, dtype=float).reshape(d)

    # One call yields the same stream as drawing step noise then smoothing noise.
    draws = rng.standard_normal((n_steps + 1, d))
    noise, z = draws[:n_steps], draws[n_steps]
    subsample = cfg.kind is SamplerKind.SGLD and k < n
    bits = _batch_bits(rng, n_steps, k) if subsample else None

    if fast and callback is None and f.sigma2 is not None and prior.mean is not None:
        chain_end = _kernels().gaussian_chain(
            theta, f.alpha, f.sigma2, prior.mean, prior.var, state.data, state.sum,
            h, noise, bits if subsample else _NO_BITS,
        )
    else:
        if callback is not None:
            callback(0, theta.copy())
        for i in range(n_steps):
            if subsample:
                grad = stochastic_grad_potential(state, f, prior, theta, batch_from_bits(bits[i], n))
            else:
                grad = grad_potential(state, f, prior, theta)
            theta = ula_step(theta, grad, h, noise[i])
            if callback is not None:
                callback(i + 1, theta.copy())
        chain_end = theta

    smoothed = chain_end + z * math.sqrt(1.0 / (n * f.L * cfg.gamma))
    per_step = k if cfg.kind is SamplerKind.SGLD else n
    return SampleOutcome(smoothed, np.array(chain_end), n_steps * per_step + n_steps)


def sample_exact_scaled(post: GaussianPosterior, gamma: float, rng: np.random.Generator) -> np.ndarray:
    """Draw from the Gaussian posterior tempered by ``gamma`` (precision times gamma)."""
    if not gamma > 0:
        raise ValueError(f"gamma must be positive, got {gamma!r}")
    sd = math.sqrt(1.0 / (gamma * post.precision))
    return post.mean + sd * rng.standard_normal(post.mean.shape)


def sample_adversarial_mixture(
    exact: GaussianPosterior, n: int, alpha: float, atom, rng: np.random.Generator
) -> np.ndarray:
    """Return ``atom`` with probability ``n**-alpha``, else an exact posterior draw.

    One uniform is drawn first; the posterior draw happens only when the
    atom does not fire.
    """
    if n < 1:
        raise ValueError("n must be at least 1")
    if not 0 < alpha <= 1:
        raise ValueError(f"alpha must lie in (0, 1], got {alpha!r}")
    if rng.random() < n ** (-alpha):
        return np.array(atom, dtype=float).reshape(exact.mean.shape)
    return sample_exact_scaled(exact, 1.0, rng)


def sample_prior_scaled(prior: PriorSpec, gamma: float, rng: np.random.Generator) -> np.ndarray:
    if not prior.is_gaussian:
        raise ValueError("closed-form prior draws need a Gaussian prior")
    return sample_exact_scaled(GaussianPosterior(prior.mean, 1.0 / prior.var), gamma, rng)


def sample_prior_langevin(
    f: FamilySpec, prior: PriorSpec, gamma: float, rng: np.random.Generator, n_steps: int = 640
) -> np.ndarray:
    """ULA draw from ``pi^gamma`` for priors without a closed form."""
    h = 1.0 / (32 * gamma * f.L)
    theta = prior_mode(f, prior)
    noise = rng.standard_normal((n_steps, f.dim))
    for i in range(n_steps):
        grad = -gamma * np.asarray(prior.grad_log_density(theta), dtype=float)
        theta = ula_step(theta, grad, h, noise[i])
    return theta


def exact_ts_gamma(f: FamilySpec) -> float:
    """Scale ``1 / (8 d kappa^3)`` under which exact Thompson sampling has log regret."""
    return 1.0 / (8 * f.dim * condition_number(f) ** 3)


def approx_ts_gamma(f: FamilySpec) -> float:
    """Scale ``nu m^2 / (32 (16 L nu m + 4 d L^3))`` for the Langevin samplers."""
    return f.nu * f.m**2 / (32 * (16 * f.L * f.nu * f.m + 4 * f.dim * f.L**3))
