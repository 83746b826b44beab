"""Per-arm posterior state and the negative log-posterior potential.

The potential is ``U(theta) = -sum_i log p(x_i | theta) - log pi(theta)``,
kept unscaled: tempering by gamma happens inside the samplers only.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from .family import FamilySpec, PriorSpec

__all__ = [
    "ArmPosteriorState",
    "GaussianPosterior",
    "potential",
    "grad_potential",
    "stochastic_grad_potential",
    "conjugate_gaussian_posterior",
    "batch_from_bits",
    "prior_mode",
]


class ArmPosteriorState:
    """Rewards observed from one arm plus the Langevin warm start.

    Rewards live in a doubling buffer so appends stay amortised O(1) over
    a long horizon; ``data`` is a read-only view of the filled part.
    """

    def __init__(self, data=None, warm_start=None):
        values = np.asarray([] if data is None else data, dtype=float).reshape(-1)
        self._buf = np.empty(max(16, 2 * values.size))
        self._buf[: values.size] = values
        self._n = values.size
        self._sum = float(values.sum())
        self.warm_start = None if warm_start is None else np.array(warm_start, dtype=float)

    @property
    def n(self) -> int:
        return self._n

    @property
    def data(self) -> np.ndarray:
        view = self._buf[: self._n]
        view.flags.writeable = False
        return view

    @property
    def sum(self) -> float:
        """Running sum of the rewards, maintained on append."""
        return self._sum

    def append(self, x: float) -> None:
        if self._n == self._buf.size:
            grown = np.empty(2 * self._buf.size)
            grown[: self._n] = self._buf[: self._n]
            self._buf = grown
        self._buf[self._n] = x
        self._n += 1
        self._sum += x

    def copy(self) -> "ArmPosteriorState":
        return ArmPosteriorState(self.data.copy(), self.warm_start)

    def __len__(self):
        return self._n

    def __repr__(self):
        return f"ArmPosteriorState(n={self._n}, warm_start={self.warm_start!r})"


@dataclass(frozen=True)
class GaussianPosterior:
    """Isotropic Gaussian ``N(mean, I / precision)``."""

    mean: np.ndarray
    precision: float

    def __post_init__(self):
        if not self.precision > 0:
            raise ValueError(f"precision must be positive, got {self.precision!r}")
        object.__setattr__(self, "mean", np.array(self.mean, dtype=float).reshape(-1))

    @property
    def var(self) -> float:
        return 1.0 / self.precision

    @property
    def std(self) -> float:
        return float(np.sqrt(1.0 / self.precision))


def _check_theta(f: FamilySpec, theta) -> np.ndarray:
    theta = np.asarray(theta, dtype=float).reshape(-1)
    if theta.shape != (f.dim,):
        raise ValueError(f"theta has length {theta.size}, expected {f.dim}")
    return theta


def potential(state: ArmPosteriorState, f: FamilySpec, prior: PriorSpec, theta) -> float:
    theta = _check_theta(f, theta)
    value = -float(prior.log_density(theta))
    if state.n:
        value -= float(np.sum(f.log_likelihood(theta, state.data)))
    return value


def grad_potential(state: ArmPosteriorState, f: FamilySpec, prior: PriorSpec, theta) -> np.ndarray:
    theta = _check_theta(f, theta)
    grad = -np.asarray(prior.grad_log_density(theta), dtype=float)
    if state.n:
        grad = grad - np.sum(f.grad_log_likelihood(theta, state.data), axis=0)
    return grad


def stochastic_grad_potential(
    state: ArmPosteriorState, f: FamilySpec, prior: PriorSpec, theta, batch_indices
) -> np.ndarray:
    """Minibatch estimate of :func:`grad_potential`, rescaled by ``n / |batch|``."""
    theta = _check_theta(f, theta)
    idx = np.asarray(batch_indices, dtype=np.intp).reshape(-1)
    if idx.size == 0:
        raise ValueError("batch must be nonempty")
    if idx.min() < 0 or idx.max() >= state.n:
        raise IndexError(f"batch indices must lie in [0, {state.n})")
    lik = np.sum(f.grad_log_likelihood(theta, state.data[idx]), axis=0)
    return -(state.n / idx.size) * lik - np.asarray(prior.grad_log_density(theta), dtype=float)


def conjugate_gaussian_posterior(prior_mean, prior_var: float, sigma2: float, data) -> GaussianPosterior:
    """Closed-form posterior for Gaussian rewards with identity mean map."""
    if not prior_var > 0 or not sigma2 > 0:
        raise ValueError("prior_var and sigma2 must be positive")
    data = np.asarray(data, dtype=float).reshape(-1)
    precision = 1.0 / prior_var + data.size / sigma2
    mean = (np.asarray(prior_mean, dtype=float) / prior_var + data.sum() / sigma2) / precision
    return GaussianPosterior(mean, precision)


def batch_from_bits(bits, n: int) -> np.ndarray:
    """Uniform ``k``-subset of ``range(n)`` from ``k`` uint32 words (Floyd's method).

    Word ``w`` picks ``(w * (j + 1)) >> 32`` in ``[0, j]``; the bias is at
    most ``n / 2**32``. Returned indices are sorted, so a full batch is
    exactly ``arange(n)``.
    """
    k = len(bits)
    if not 1 <= k <= n:
        raise ValueError(f"need 1 <= k <= n, got k={k}, n={n}")
    chosen = set()
    for i, j in enumerate(range(n - k, n)):
        t = (int(bits[i]) * (j + 1)) >> 32
        chosen.add(j if t in chosen else t)
    return np.fromiter(sorted(chosen), dtype=np.intp, count=k)


def prior_mode(f: FamilySpec, prior: PriorSpec, n_iter: int = 100) -> np.ndarray:
    """Mode of the prior: the mean if Gaussian, else gradient ascent from zero."""
    if prior.is_gaussian:
        return np.array(prior.mean, dtype=float)
    theta = np.zeros(f.dim)
    step = 1.0 / f.L
    for _ in range(n_iter):
        theta = theta + step * np.asarray(prior.grad_log_density(theta), dtype=float)
    return theta
