"""Command line entry point: ``bench``, ``diagnose`` and ``counterexample``.

Exit status is 0 on success, 1 for configuration errors and 2 for I/O
errors.
"""
from __future__ import annotations

import argparse
import sys
from pathlib import Path

import numpy as np

from . import diagnostics as dg
from .family import gaussian_arm, gaussian_family, gaussian_prior
from .harness import (
    ConfigError,
    ExperimentConfig,
    emit_csv,
    emit_summary_csv,
    emit_svg,
    regret_slope,
    run_experiment,
)
from .posterior import ArmPosteriorState, conjugate_gaussian_posterior
from .samplers import SamplerConfig, SamplerKind

EXIT_OK, EXIT_CONFIG, EXIT_IO = 0, 1, 2


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_CONFIG, f"{self.prog}: error: {message}\n")


def _int_list(text: str) -> list[int]:
    try:
        values = [int(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}") from None
    if not values or min(values) < 1:
        raise argparse.ArgumentTypeError("expected positive integers")
    return values


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="langevin-ts", description="Thompson sampling bandit benchmarks and diagnostics.")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    bench = sub.add_parser("bench", help="run policies on a bandit instance")
    bench.add_argument("--instance", default="good", help="good|agnostic|adversarial|custom:<path>")
    bench.add_argument("--policies", default="ExactTS,UlaTS,SgldTS,UCB")
    bench.add_argument("--horizon", type=int, default=10_000)
    bench.add_argument("--runs", type=int, default=20)
    bench.add_argument("--seed", type=int, default=0)
    bench.add_argument("--schedule", choices=("theoretical", "practical"), default="practical")
    bench.add_argument("--gamma", type=float, default=1.0)
    bench.add_argument("--mixture-alpha", type=float, default=0.5)
    bench.add_argument("--mixture-atom", type=float, default=2.0)
    bench.add_argument("--corrupted-arms", type=str, default="1", help="0-based arm indices")
    bench.add_argument("--workers", type=int, default=1)
    bench.add_argument("--out", required=True)

    diag = sub.add_parser("diagnose", help="check sampler and concentration bounds")
    diag.add_argument("--check", choices=("concentration", "wasserstein", "subgaussian"), required=True)
    diag.add_argument("--n", type=_int_list, default=[10, 100])
    diag.add_argument("--draws", type=int, default=20_000)
    diag.add_argument("--seed", type=int, default=0)
    diag.add_argument("--out", required=True)

    ce = sub.add_parser("counterexample", help="corrupted-posterior sampler on the two-arm instance")
    ce.add_argument("--alpha", type=float, default=0.5)
    ce.add_argument("--atom", type=float, default=2.0)
    ce.add_argument("--horizon", type=int, default=100_000)
    ce.add_argument("--runs", type=int, default=50)
    ce.add_argument("--seed", type=int, default=0)
    ce.add_argument("--workers", type=int, default=1)
    ce.add_argument("--out", required=True)
    return parser


def _write_tables(table, out: Path) -> None:
    emit_csv(table, out / "results.csv")
    emit_summary_csv(table, out / "summary.csv")
    if table.horizon and any(table.runs(p) for p in table.policies):
        emit_svg(table, out / f"regret_{table.instance}.svg")


def _print_table(table) -> None:
    for policy in table.policies:
        mean, half, ok = table.aggregate(policy)
        final = f"{mean[-1]:.3f} +/- {half[-1]:.3f}" if mean.size else "n/a"
        print(f"{policy:<10} runs={ok:<4d} final regret {final}")
    for policy, run, reason in table.failures():
        print(f"{policy} run {run} failed: {reason}", file=sys.stderr)


def cmd_bench(args) -> int:
    cfg = ExperimentConfig(
        instance=args.instance,
        policies=args.policies,
        horizon=args.horizon,
        runs=args.runs,
        base_seed=args.seed,
        schedule=args.schedule,
        gamma=args.gamma,
        mixture_alpha=args.mixture_alpha,
        mixture_atom=args.mixture_atom,
        corrupted_arms=tuple(int(a) for a in args.corrupted_arms.split(",") if a.strip()),
        workers=args.workers,
    )
    cfg.build_instance()
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    table = run_experiment(cfg)
    _write_tables(table, out)
    _print_table(table)
    return EXIT_OK


def _diag_concentration(ns, draws, rng) -> list:
    f, theta_star = gaussian_family(1.0), 0.0
    prior = gaussian_prior([theta_star], 1.0, theta_star=[theta_star])
    results = []
    for n in ns:
        data = theta_star + rng.standard_normal(n)
        post = conjugate_gaussian_posterior(prior.mean, prior.var, 1.0, data)
        exact = post.mean[0] + post.std * rng.standard_normal(draws)
        state = ArmPosteriorState(data)
        approx = {
            kind: dg.langevin_draws(state, f, prior, SamplerConfig(kind), draws, rng)[0][:, 0]
            for kind in (SamplerKind.ULA, SamplerKind.SGLD)
        }
        for delta in (0.5, 0.1, 0.01):
            r_exact = dg.concentration_radius_exact(f, prior.log_B, n, 1.0, delta)
            r_approx = dg.concentration_radius_approx(f, prior.log_B, n, 1.0, delta)
            note = f"delta={delta}, scaled posterior gamma=1"
            results.append(dg.concentration_check("conc_exact", np.abs(exact - theta_star), n, delta, r_exact, note))
            for kind, x in approx.items():
                results.append(
                    dg.concentration_check(f"conc_{kind.value}", np.abs(x - theta_star), n, delta, r_approx, note)
                )
    return results


def _diag_wasserstein(ns, draws, rng) -> list:
    f = gaussian_family(1.0)
    prior = gaussian_prior([0.0], 1.0, theta_star=[0.0])
    results = []
    for n in ns:
        data = rng.standard_normal(n)
        post = conjugate_gaussian_posterior(prior.mean, prior.var, 1.0, data)
        exact = post.mean[0] + post.std * rng.standard_normal(draws)
        state = ArmPosteriorState(data)
        for kind in (SamplerKind.ULA, SamplerKind.SGLD):
            ends = dg.langevin_draws(state, f, prior, SamplerConfig(kind), draws, rng)[1][:, 0]
            for p in (1, 2):
                r = dg.sampler_convergence_report(exact, ends, n, f, p, prior.log_B)
                r.check = f"{r.check}_{kind.value}"
                r.note = f"W/posterior_std={r.empirical / post.std:.4f}"
                results.append(r)
    return results


def _diag_subgaussian(ns, draws, rng) -> list:
    f = gaussian_family(1.0)
    arm = gaussian_arm([0.0])
    return [r for n in ns for r in dg.grad_subgaussian_check(f, arm, n, draws, rng)]


def cmd_diagnose(args) -> int:
    if args.draws < 2:
        raise ConfigError("draws must be at least 2")
    rng = np.random.default_rng(args.seed)
    run = {"concentration": _diag_concentration, "wasserstein": _diag_wasserstein, "subgaussian": _diag_subgaussian}
    results = run[args.check](args.n, args.draws, rng)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    dg.write_csv(results, out / "diagnostics.csv")
    sys.stdout.write(dg.format_report(results))
    return EXIT_OK


def cmd_counterexample(args) -> int:
    cfg = ExperimentConfig(
        instance="counterexample",
        policies=("MixtureTS", "ExactTS"),
        horizon=args.horizon,
        runs=args.runs,
        base_seed=args.seed,
        mixture_alpha=args.alpha,
        mixture_atom=args.atom,
        corrupted_arms=(1,),
        workers=args.workers,
    )
    cfg.build_instance()
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    table = run_experiment(cfg)
    _write_tables(table, out)
    _print_table(table)
    t_lo, t_hi = min(1000, args.horizon // 100), args.horizon
    if t_lo >= 1 and t_hi > t_lo:
        for policy in table.policies:
            mean = table.aggregate(policy)[0]
            if mean.size and np.all(mean[t_lo - 1 :] > 0):
                print(f"{policy:<10} log-log regret slope on [{t_lo}, {t_hi}]: {regret_slope(mean, t_lo, t_hi):.3f}")
        print(f"reference exponent 1 - alpha = {1 - args.alpha:.3f}")
    return EXIT_OK


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    handler = {"bench": cmd_bench, "diagnose": cmd_diagnose, "counterexample": cmd_counterexample}[args.command]
    try:
        return handler(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except OSError as exc:
        print(f"I/O error: {exc}", file=sys.stderr)
        return EXIT_IO
    except ValueError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
