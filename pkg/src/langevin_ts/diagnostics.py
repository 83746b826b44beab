"""Closed-form concentration radii and empirical checks against them.

Every empirical-vs-bound comparison carries a Monte Carlo slack of three
standard errors, reported next to the verdict. Multivariate parameters
are projected onto ``alpha`` before any distance is estimated.
"""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from .family import FamilySpec, TrueArm, condition_number
from .posterior import ArmPosteriorState
from .samplers import SamplerConfig, run_langevin

__all__ = [
    "EmpiricalSample",
    "CheckResult",
    "wasserstein_1d",
    "concentration_radius_exact",
    "concentration_radius_approx",
    "sgld_wasserstein_bound",
    "quantile_upper_slack",
    "concentration_check",
    "grad_subgaussian_check",
    "sampler_convergence_report",
    "langevin_draws",
    "format_report",
    "write_csv",
]

SLACK_SE = 3.0


@dataclass(frozen=True)
class EmpiricalSample:
    """One-dimensional sample; ``sorted=True`` stores the order statistics."""

    values: np.ndarray
    sorted: bool = False

    def __post_init__(self):
        values = np.array(self.values, dtype=float).reshape(-1)
        if self.sorted:
            values = np.sort(values)
        values.setflags(write=False)
        object.__setattr__(self, "values", values)

    @classmethod
    def projected(cls, thetas, alpha) -> "EmpiricalSample":
        """Sample of ``alpha^T theta`` from an ``(n, d)`` array of parameters."""
        thetas = np.asarray(thetas, dtype=float)
        alpha = np.asarray(alpha, dtype=float).reshape(-1)
        if thetas.ndim == 1:
            thetas = thetas.reshape(-1, alpha.size)
        return cls(thetas @ alpha, sorted=True)

    def order_statistics(self) -> np.ndarray:
        return self.values if self.sorted else np.sort(self.values)

    def __len__(self):
        return self.values.size


@dataclass
class CheckResult:
    check: str
    n: int
    empirical: float
    bound: float
    slack: float = 0.0
    note: str = ""
    extra: dict = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return bool(self.empirical <= self.bound + self.slack)

    @property
    def verdict(self) -> str:
        return "pass" if self.passed else "fail"


def _as_sample(x) -> EmpiricalSample:
    return x if isinstance(x, EmpiricalSample) else EmpiricalSample(x)


def wasserstein_1d(a, b, p: int = 1) -> float:
    """Order-statistics estimate ``(mean_i |a_(i) - b_(i)|^p)^(1/p)``."""
    if p < 1:
        raise ValueError(f"p must be at least 1, got {p!r}")
    xa = _as_sample(a).order_statistics()
    xb = _as_sample(b).order_statistics()
    if xa.size != xb.size:
        raise ValueError(f"samples must have equal length, got {xa.size} and {xb.size}")
    if xa.size == 0:
        raise ValueError("samples must be nonempty")
    diff = np.abs(xa - xb)
    if p == 1:
        return float(diff.mean())
    return float(np.mean(diff**p) ** (1.0 / p))


def _check_delta(delta: float) -> float:
    if not 0 < delta < 1:
        raise ValueError(f"delta must lie in (0, 1), got {delta!r}")
    return float(delta)


def _check_n(n) -> int:
    if int(n) != n or n < 1:
        raise ValueError(f"n must be a positive integer, got {n!r}")
    return int(n)


def concentration_radius_exact(f: FamilySpec, log_B: float, n: int, gamma: float, delta: float) -> float:
    """Radius outside which the scaled posterior puts mass below ``delta``."""
    n, log_inv = _check_n(n), math.log(1.0 / _check_delta(delta))
    d, kappa = f.dim, condition_number(f)
    inner = d / gamma + log_B + (32.0 / gamma + 8.0 * d * kappa**2) * log_inv
    return math.sqrt(2.0 * math.e / (f.m * n) * inner)


def concentration_radius_approx(f: FamilySpec, log_B: float, n: int, gamma: float, delta: float) -> float:
    """Same as :func:`concentration_radius_exact` for smoothed Langevin outputs."""
    n, log_inv = _check_n(n), math.log(1.0 / _check_delta(delta))
    d, kappa = f.dim, condition_number(f)
    sigma = 16.0 + 4.0 * d * kappa**2
    inner = d + log_B + 2.0 * (sigma + d / (18.0 * kappa * gamma)) * log_inv
    return math.sqrt(36.0 * math.e / (f.m * n) * inner)


def sgld_wasserstein_bound(f: FamilySpec, log_B: float, n: int, p: int) -> float:
    """Wasserstein-p bound between the chain end and the posterior."""
    n = _check_n(n)
    d, kappa = f.dim, condition_number(f)
    return math.sqrt(8.0 / (n * f.m)) * math.sqrt(d + log_B + (32.0 + 8.0 * d * kappa**2) * p)


def quantile_upper_slack(values, q: float, n_se: float = SLACK_SE) -> tuple[float, float]:
    """Empirical ``q``-quantile and the slack up to an ``n_se``-SE upper order statistic.

    Uses the binomial count of points below the quantile, so no density
    estimate is needed.
    """
    x = np.sort(np.asarray(values, dtype=float).reshape(-1))
    N = x.size
    if N == 0:
        raise ValueError("need at least one value")
    est = float(np.quantile(x, q))
    upper = min(N - 1, int(math.ceil(N * q + n_se * math.sqrt(N * q * (1 - q)))))
    return est, max(float(x[upper]) - est, 0.0)


def concentration_check(
    check: str, distances, n: int, delta: float, radius: float, note: str = ""
) -> CheckResult:
    """Compare the ``1 - delta`` quantile of ``|theta - theta*|`` with a radius."""
    delta = _check_delta(delta)
    q, slack = quantile_upper_slack(distances, 1.0 - delta)
    return CheckResult(check, n, q, radius, slack, note, {"delta": delta})


def _grad_norms_at_truth(f: FamilySpec, arm: TrueArm, n: int, n_trials: int, rng) -> np.ndarray:
    theta = arm.theta_star
    if arm.reward_mean is not None and arm.reward_sd is not None:
        x = arm.reward_mean + arm.reward_sd * rng.standard_normal((n_trials, n))
    else:
        x = np.array([[arm.reward_sampler(rng) for _ in range(n)] for _ in range(n_trials)])
    norms = np.empty(n_trials)
    for i in range(n_trials):
        g = np.asarray(f.grad_log_likelihood(theta, x[i]), dtype=float).reshape(n, f.dim)
        norms[i] = np.linalg.norm(g.mean(axis=0))
    return norms


def grad_subgaussian_check(
    f: FamilySpec, arm: TrueArm, n: int, n_trials: int, rng, levels: Sequence[float] = (1, 2, 3)
) -> list[CheckResult]:
    """Tail of the averaged score at ``theta*`` against ``2 exp(-t^2 / (2 s^2))``.

    ``s = L sqrt(d / (n nu))``; one result per level ``t = c s``.
    """
    n = _check_n(n)
    norms = _grad_norms_at_truth(f, arm, n, int(n_trials), rng)
    s = f.L * math.sqrt(f.dim / (n * f.nu))
    out = []
    for c in levels:
        tail = float(np.mean(norms > c * s))
        bound = min(1.0, 2.0 * math.exp(-0.5 * c * c))
        se = math.sqrt(max(tail * (1 - tail), 1.0 / n_trials) / n_trials)
        out.append(
            CheckResult("subgaussian", n, tail, bound, SLACK_SE * se, f"level={c}s", {"scale": s, "level": c})
        )
    return out


def sampler_convergence_report(exact, sampler, n: int, f: FamilySpec, p: int, log_B: float = 0.0) -> CheckResult:
    """Empirical Wasserstein-p between sampler and exact draws against the bound.

    The standard error is the noise floor of the estimator itself: the
    distance between the two interleaved halves of the exact sample,
    divided by ``sqrt(2)``, which is what two independent draws of the
    same law would show at this sample size.
    """
    xa = _as_sample(exact)
    xb = _as_sample(sampler)
    w = wasserstein_1d(xa, xb, p)
    raw = xa.values
    half = raw.size // 2
    se = wasserstein_1d(raw[0 : 2 * half : 2], raw[1 : 2 * half : 2], p) / math.sqrt(2.0) if half else 0.0
    bound = sgld_wasserstein_bound(f, log_B, n, p)
    return CheckResult(f"wasserstein_p{p}", n, w, bound, SLACK_SE * se, "", {"se": se, "p": p})


def langevin_draws(
    state: ArmPosteriorState,
    f: FamilySpec,
    prior,
    cfg: SamplerConfig,
    n_draws: int,
    rng,
    warm_start=None,
) -> tuple[np.ndarray, np.ndarray]:
    """Independent Langevin outputs for one posterior.

    Each chain starts from ``warm_start`` (the prior mode when None).
    Returns ``(outputs, chain_ends)``, both of shape ``(n_draws, d)``.
    """
    outputs = np.empty((n_draws, f.dim))
    ends = np.empty((n_draws, f.dim))
    start = None if warm_start is None else np.asarray(warm_start, dtype=float)
    for i in range(n_draws):
        state.warm_start = start
        res = run_langevin(state, f, prior, cfg, rng)
        outputs[i], ends[i] = res.theta, res.chain_end
    state.warm_start = start
    return outputs, ends


def format_report(results: Iterable[CheckResult]) -> str:
    lines = [f"{'check':<18} {'n':>6} {'empirical':>12} {'bound':>12} {'slack':>10}  verdict  note"]
    for r in results:
        lines.append(
            f"{r.check:<18} {r.n:>6d} {r.empirical:>12.6g} {r.bound:>12.6g} {r.slack:>10.3g}  {r.verdict:<7}  {r.note}"
        )
    return "\n".join(lines) + "\n"


def write_csv(results: Iterable[CheckResult], path) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["check", "n", "empirical", "bound", "verdict"])
        for r in results:
            writer.writerow([r.check, r.n, repr(float(r.empirical)), repr(float(r.bound)), r.verdict])
