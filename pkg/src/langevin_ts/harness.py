"""Seeded experiment runner, builtin instances and CSV / SVG output."""
from __future__ import annotations

import csv
import functools
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional
from xml.sax.saxutils import escape, quoteattr

import numpy as np

from .family import gaussian_arm, gaussian_family, gaussian_prior
from .policies import UCB, Arm, BanditInstance, RegretTrace, ThompsonSampling
from .samplers import Schedule
from .validation import stable_key

__all__ = [
    "ConfigError",
    "POLICIES",
    "ExperimentConfig",
    "ResultTable",
    "builtin_instance",
    "counterexample_instance",
    "load_custom_instance",
    "resolve_instance",
    "run_experiment",
    "regret_slope",
    "emit_csv",
    "emit_summary_csv",
    "emit_svg",
]

POLICIES = ("ExactTS", "UlaTS", "SgldTS", "UCB", "MixtureTS")
_ALIASES = {p.lower(): p for p in POLICIES} | {
    "exact": "ExactTS",
    "ula": "UlaTS",
    "sgld": "SgldTS",
    "mixture": "MixtureTS",
}
_BUILTIN = {"good": "GoodPriors", "agnostic": "AgnosticPriors", "adversarial": "AdversarialPriors"}
REWARD_KEY = stable_key("rewards")


class ConfigError(ValueError):
    """Invalid experiment configuration or instance file."""


def _instance_from_lists(means, prior_means, prior_vars, reward_var: float, name: str) -> BanditInstance:
    f = gaussian_family(reward_var)
    arms = [
        Arm(f, gaussian_prior([pm], pv, theta_star=[mu]), gaussian_arm([mu], reward_var))
        for mu, pm, pv in zip(means, prior_means, prior_vars)
    ]
    return BanditInstance(tuple(arms), 0, name)


def builtin_instance(which: str) -> BanditInstance:
    """Ten unit-variance Gaussian arms with means 1..10 and variance-4 priors.

    Prior means: ``good`` rises from 5 to 10 with the arm means,
    ``agnostic`` is flat at 7.5, ``adversarial`` falls from 10 to 5.
    """
    key = which.lower().removesuffix("priors")
    if key not in _BUILTIN:
        raise ConfigError(f"unknown instance {which!r}; expected one of {sorted(_BUILTIN)}")
    i = np.arange(10)
    prior_means = {
        "good": 5 + 5 * i / 9,
        "agnostic": np.full(10, 7.5),
        "adversarial": 10 - 5 * i / 9,
    }[key]
    return _instance_from_lists(i + 1.0, prior_means, [4.0] * 10, 1.0, _BUILTIN[key])


def counterexample_instance() -> BanditInstance:
    """Two arms with means 1 and 0 and standard normal priors."""
    return _instance_from_lists([1.0, 0.0], [0.0, 0.0], [1.0, 1.0], 1.0, "Counterexample")


def _parse_kv(path) -> dict[str, str]:
    out = {}
    with open(path) as fh:
        for lineno, raw in enumerate(fh, 1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ConfigError(f"{path}:{lineno}: expected key=value, got {line!r}")
            key, value = (s.strip() for s in line.split("=", 1))
            if key in out:
                raise ConfigError(f"{path}:{lineno}: duplicate key {key!r}")
            out[key] = value
    return out


def load_custom_instance(path) -> BanditInstance:
    """Read ``mean_i``, ``prior_mean_i``, ``prior_var_i`` (i = 1..K) and ``reward_var``."""
    kv = _parse_kv(path)
    try:
        values = {k: float(v) for k, v in kv.items()}
    except ValueError as exc:
        raise ConfigError(f"{path}: {exc}") from None
    reward_var = values.pop("reward_var", None)
    if reward_var is None:
        raise ConfigError(f"{path}: missing reward_var")
    K = sum(1 for k in values if k.startswith("mean_"))
    cols = {}
    for prefix in ("mean", "prior_mean", "prior_var"):
        try:
            cols[prefix] = [values.pop(f"{prefix}_{i}") for i in range(1, K + 1)]
        except KeyError as exc:
            raise ConfigError(f"{path}: missing {exc.args[0]}") from None
    if values:
        raise ConfigError(f"{path}: unknown keys {sorted(values)}")
    try:
        return _instance_from_lists(
            cols["mean"], cols["prior_mean"], cols["prior_var"], reward_var, Path(path).stem
        )
    except ValueError as exc:
        raise ConfigError(f"{path}: {exc}") from None


def resolve_instance(name: str) -> BanditInstance:
    if name.startswith("custom:"):
        return load_custom_instance(name[len("custom:") :])
    if name.lower() == "counterexample":
        return counterexample_instance()
    return builtin_instance(name)


def _policy_name(name: str) -> str:
    try:
        return _ALIASES[name.strip().lower()]
    except KeyError:
        raise ConfigError(f"unknown policy {name!r}; expected one of {list(POLICIES)}") from None


@dataclass(frozen=True)
class ExperimentConfig:
    """One benchmark: an instance, a set of policies and the seeding.

    ``instance`` is ``good``, ``agnostic``, ``adversarial``,
    ``counterexample`` or ``custom:<path>``.
    """

    instance: str = "good"
    policies: tuple = ("ExactTS", "UlaTS", "SgldTS", "UCB")
    horizon: int = 10_000
    runs: int = 20
    base_seed: int = 0
    schedule: str = "practical"
    gamma: float = 1.0
    mixture_alpha: float = 0.5
    mixture_atom: float = 2.0
    corrupted_arms: tuple = (1,)
    workers: int = 1

    def __post_init__(self):
        policies = self.policies
        if isinstance(policies, str):
            policies = policies.split(",")
        names = tuple(dict.fromkeys(_policy_name(p) for p in policies))
        if not names:
            raise ConfigError("at least one policy is required")
        object.__setattr__(self, "policies", names)
        for attr in ("horizon", "runs", "base_seed", "workers"):
            value = getattr(self, attr)
            if isinstance(value, bool) or int(value) != value:
                raise ConfigError(f"{attr} must be an integer, got {value!r}")
            object.__setattr__(self, attr, int(value))
        if self.horizon < 0:
            raise ConfigError(f"horizon must be nonnegative, got {self.horizon}")
        if self.runs < 1:
            raise ConfigError(f"runs must be at least 1, got {self.runs}")
        if not 0 <= self.base_seed < 2**64:
            raise ConfigError("base_seed must be a 64-bit unsigned integer")
        if self.workers < 1:
            raise ConfigError("workers must be at least 1")
        try:
            Schedule(self.schedule)
        except ValueError:
            raise ConfigError(f"schedule must be 'theoretical' or 'practical', got {self.schedule!r}") from None
        if not self.gamma > 0:
            raise ConfigError(f"gamma must be positive, got {self.gamma!r}")
        if "MixtureTS" in names and not 0 < self.mixture_alpha <= 1:
            raise ConfigError(f"mixture_alpha must lie in (0, 1], got {self.mixture_alpha!r}")
        object.__setattr__(self, "corrupted_arms", tuple(int(a) for a in self.corrupted_arms))

    def build_instance(self) -> BanditInstance:
        inst = resolve_instance(self.instance)
        if "UCB" in self.policies and self.horizon and self.horizon < inst.n_arms:
            raise ConfigError(f"UCB needs horizon >= {inst.n_arms} arms, got {self.horizon}")
        if "MixtureTS" in self.policies and any(not 0 <= a < inst.n_arms for a in self.corrupted_arms):
            raise ConfigError(f"corrupted arms {self.corrupted_arms} out of range for {inst.n_arms} arms")
        return inst


def _seed(cfg: ExperimentConfig, key: int, run: int) -> np.random.SeedSequence:
    return np.random.SeedSequence(cfg.base_seed, spawn_key=(key, run))


def make_policy(name: str, cfg: ExperimentConfig, run: int):
    """Policy for one run. Reward streams depend only on (seed, run)."""
    seeds = dict(random_state=_seed(cfg, stable_key(name), run), reward_random_state=_seed(cfg, REWARD_KEY, run))
    if name == "UCB":
        return UCB(**seeds)
    if name == "MixtureTS":
        return ThompsonSampling(
            "mixture",
            gamma=cfg.gamma,
            mixture_alpha=cfg.mixture_alpha,
            mixture_atom=[cfg.mixture_atom],
            corrupted_arms=cfg.corrupted_arms,
            **seeds,
        )
    kind = {"ExactTS": "exact", "UlaTS": "ula", "SgldTS": "sgld"}[name]
    return ThompsonSampling(kind, gamma=cfg.gamma, schedule=cfg.schedule, **seeds)


@functools.lru_cache(maxsize=4)
def _worker_instance(cfg: ExperimentConfig) -> BanditInstance:
    return cfg.build_instance()


def _run_one(job) -> tuple[str, int, RegretTrace]:
    cfg, instance, name, run = job
    if instance is None:
        instance = _worker_instance(cfg)
    try:
        trace = make_policy(name, cfg, run).fit(instance, cfg.horizon).trace_
    except (ArithmeticError, ValueError, FloatingPointError, np.linalg.LinAlgError) as exc:
        trace = RegretTrace(np.zeros(0, np.intp), np.zeros(0), np.zeros(0), f"{type(exc).__name__}: {exc}")
    return name, run, trace


@dataclass
class ResultTable:
    """Per-run traces plus per-round mean regret and 95% CI half-widths."""

    instance: str
    horizon: int
    traces: dict = field(default_factory=dict)

    @property
    def policies(self) -> list[str]:
        return sorted({p for p, _ in self.traces})

    def runs(self, policy: str, include_failed: bool = False) -> list[RegretTrace]:
        keys = sorted(r for p, r in self.traces if p == policy)
        out = [self.traces[policy, r] for r in keys]
        return out if include_failed else [t for t in out if t.failed is None]

    def failures(self) -> list[tuple[str, int, str]]:
        return [(p, r, t.failed) for (p, r), t in sorted(self.traces.items()) if t.failed is not None]

    def aggregate(self, policy: str) -> tuple[np.ndarray, np.ndarray, int]:
        """``(mean, ci_half_width, surviving_runs)`` of cumulative regret per round."""
        ok = self.runs(policy)
        if not ok or self.horizon == 0:
            return np.zeros(0), np.zeros(0), len(ok)
        curves = np.stack([t.cum_regret for t in ok])
        mean = curves.mean(axis=0)
        if len(ok) < 2:
            return mean, np.zeros_like(mean), 1
        half = 1.96 * curves.std(axis=0, ddof=1) / math.sqrt(len(ok))
        return mean, half, len(ok)

    def final_mean(self, policy: str) -> float:
        mean, _, _ = self.aggregate(policy)
        return float(mean[-1]) if mean.size else float("nan")


def run_experiment(cfg: ExperimentConfig, instance: Optional[BanditInstance] = None) -> ResultTable:
    """Run every (policy, run) pair; failures are kept in the table.

    With ``workers > 1`` each worker process rebuilds the instance from
    ``cfg``, so an explicit ``instance`` is only honoured serially.
    """
    parallel = cfg.workers > 1 and cfg.runs * len(cfg.policies) > 1
    if instance is not None and parallel:
        raise ConfigError("an explicit instance cannot be combined with workers > 1")
    instance = cfg.build_instance() if instance is None else instance
    jobs = [(cfg, None if parallel else instance, name, r) for name in cfg.policies for r in range(cfg.runs)]
    if parallel:
        with ProcessPoolExecutor(max_workers=cfg.workers) as pool:
            results = list(pool.map(_run_one, jobs))
    else:
        results = [_run_one(job) for job in jobs]
    table = ResultTable(instance.name, cfg.horizon)
    for name, run, trace in sorted(results, key=lambda x: (x[0], x[1])):
        table.traces[name, run] = trace
    return table


def regret_slope(mean_regret, t_lo: int, t_hi: int, n_points: int = 41) -> float:
    """Least-squares slope of log regret against log t on a geometric grid of rounds."""
    mean_regret = np.asarray(mean_regret, dtype=float)
    if not 1 <= t_lo < t_hi <= mean_regret.size:
        raise ValueError(f"need 1 <= t_lo < t_hi <= {mean_regret.size}")
    t = np.unique(np.geomspace(t_lo, t_hi, n_points).round().astype(int))
    y = mean_regret[t - 1]
    if np.any(y <= 0):
        raise ValueError("regret must be positive on the fitting range")
    return float(np.polyfit(np.log(t), np.log(y), 1)[0])


def _fmt(x: float) -> str:
    return format(float(x), ".17g")


def emit_csv(table: ResultTable, path) -> None:
    """Header ``policy,run,t,arm,cum_regret``; rows sorted by (policy, run, t)."""
    with open(path, "w", newline="") as fh:
        fh.write("policy,run,t,arm,cum_regret\n")
        for policy in table.policies:
            for (p, run), trace in sorted(table.traces.items()):
                if p != policy or trace.failed is not None:
                    continue
                prefix = f"{policy},{run},"
                fh.writelines(
                    f"{prefix}{t},{arm},{_fmt(c)}\n"
                    for t, arm, c in zip(range(1, len(trace) + 1), trace.chosen.tolist(), trace.cum_regret.tolist())
                )


def emit_summary_csv(table: ResultTable, path) -> None:
    """Per (policy, t) mean regret and CI half-width, plus failed-run counts."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["policy", "t", "mean_cum_regret", "ci_half_width", "runs", "failed"])
        for policy in table.policies:
            mean, half, ok = table.aggregate(policy)
            failed = len(table.runs(policy, include_failed=True)) - ok
            for t in range(mean.size):
                writer.writerow([policy, t + 1, _fmt(mean[t]), _fmt(half[t]), ok, failed])


_COLORS = ("#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b")


def emit_svg(table: ResultTable, path, width: int = 720, height: int = 440, max_points: int = 400) -> None:
    """Mean cumulative regret per policy with a shaded 95% CI band."""
    curves = [(p, *table.aggregate(p)[:2]) for p in table.policies]
    curves = [c for c in curves if c[1].size]
    if not curves:
        raise ValueError("no aggregates to plot")
    T = max(c[1].size for c in curves)
    idx = np.unique(np.linspace(0, T - 1, min(T, max_points)).round().astype(int))
    top = max(float(np.max(m + h)) for _, m, h in curves)
    top = top if top > 0 else 1.0
    left, right, upper, lower = 70, 160, 40, 50
    pw, ph = width - left - right, height - upper - lower

    def xy(t, y):
        x = left + (pw * (t - 1) / (T - 1) if T > 1 else pw / 2)
        return f"{x:.2f},{upper + ph * (1 - y / top):.2f}"

    out = [
        '<?xml version="1.0" encoding="UTF-8"?>',
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" viewBox="0 0 {width} {height}">',
        '<rect width="100%" height="100%" fill="white"/>',
        f'<text x="{left}" y="24" font-size="15" font-family="sans-serif">{escape(table.instance)}</text>',
        f'<line x1="{left}" y1="{upper + ph}" x2="{left + pw}" y2="{upper + ph}" stroke="black"/>',
        f'<line x1="{left}" y1="{upper}" x2="{left}" y2="{upper + ph}" stroke="black"/>',
        f'<text x="{left + pw / 2}" y="{height - 12}" font-size="12" text-anchor="middle" font-family="sans-serif">t</text>',
        f'<text x="16" y="{upper + ph / 2}" font-size="12" text-anchor="middle" font-family="sans-serif" '
        f'transform="rotate(-90 16 {upper + ph / 2})">mean cumulative regret</text>',
    ]
    for frac in (0.0, 0.5, 1.0):
        t_tick = 1 + frac * (T - 1)
        x, _ = xy(t_tick, 0).split(",")
        out.append(f'<text x="{x}" y="{upper + ph + 16}" font-size="10" text-anchor="middle">{round(t_tick)}</text>')
        y = upper + ph * (1 - frac)
        out.append(f'<text x="{left - 6}" y="{y + 3:.2f}" font-size="10" text-anchor="end">{frac * top:.4g}</text>')
    for i, (policy, mean, half) in enumerate(curves):
        color = _COLORS[i % len(_COLORS)]
        pts = idx[idx < mean.size]
        lo = np.maximum(mean[pts] - half[pts], 0.0)
        hi = mean[pts] + half[pts]
        band = [xy(t + 1, y) for t, y in zip(pts, hi)] + [xy(t + 1, y) for t, y in zip(pts[::-1], lo[::-1])]
        out.append(f'<polygon points="{" ".join(band)}" fill="{color}" fill-opacity="0.2" stroke="none"/>')
        line = " L".join(xy(t + 1, y) for t, y in zip(pts, mean[pts]))
        out.append(f'<path d="M{line}" fill="none" stroke="{color}" stroke-width="1.5">'
                   f"<title>{escape(policy)}</title></path>")
        ly = upper + 10 + 18 * i
        out.append(f'<rect x="{left + pw + 15}" y="{ly - 8}" width="14" height="3" fill="{color}"/>')
        out.append(f'<text x="{left + pw + 35}" y="{ly}" font-size="12" font-family="sans-serif" '
                   f'data-policy={quoteattr(policy)}>{escape(policy)}</text>')
    out.append("</svg>")
    Path(path).write_text("\n".join(out) + "\n")
