"""Command-line entry point.

Subcommands: rates, validate, simulate, pde, converge. Exit status 0 on
success, 2 on configuration or validation errors (the message names the
offending key or parameter), 1 on runtime faults. Every subcommand's --help
lists all config keys with defaults, generated from the key registry.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import sys
from pathlib import Path

from .config import (
    ConfigError,
    config_reference,
    load_config,
    make_grid,
    make_initial,
    make_kernel,
    make_model,
    make_mollifier,
    make_pde,
    make_plan,
    make_sim,
)
from .params import ParameterError, derive_rates, validate_hypothesis


def _add_common(sub: argparse.ArgumentParser) -> None:
    sub.add_argument("--config", default=None, help="path to a flat config file")
    sub.add_argument(
        "--set", action="append", default=[], metavar="section.key=value",
        help="override a config key (repeatable, last write wins)",
    )
    sub.add_argument("--seed", type=int, default=0, help="master RNG seed")
    sub.add_argument("--out", default="out", help="output directory")
    sub.add_argument(
        "--threads", type=int, default=1,
        help="worker-count hint (results are schedule-independent)",
    )


def build_parser() -> argparse.ArgumentParser:
    epilog = "config keys:\n" + config_reference()
    parser = argparse.ArgumentParser(
        prog="kinchaos",
        description="kinetic particle-system convergence toolkit",
        formatter_class=argparse.RawDescriptionHelpFormatter,
        epilog=epilog,
    )
    subs = parser.add_subparsers(dest="command", required=True)
    for name, help_text in (
        ("rates", "print the derived rate exponents and the hypothesis report"),
        ("validate", "check the hypothesis conditions for the configured model"),
        ("simulate", "run the particle system and dump snapshots"),
        ("pde", "solve the kinetic reference equation and dump snapshots"),
        ("converge", "run a convergence study and write its report"),
    ):
        sub = subs.add_parser(
            name, help=help_text, epilog=epilog,
            formatter_class=argparse.RawDescriptionHelpFormatter,
        )
        _add_common(sub)
        if name == "converge":
            sub.add_argument(
                "--mode", default=None,
                choices=["moderate", "weak", "strong", "sampling", "mollifier_scaling"],
                help="study mode (default: experiment.mode from config)",
            )
        if name == "simulate":
            sub.add_argument("--n", type=int, default=1024, help="particle count")
            sub.add_argument("--replica", type=int, default=0, help="replica id")
    return parser


def _cmd_rates(args) -> int:
    cfg = load_config(args.config, args.set)
    model = make_model(cfg)
    kernel = make_kernel(cfg)
    rates = derive_rates(model, epsilon=cfg["model.epsilon"])
    report = validate_hypothesis(model, kernel)
    print("derived rates:")
    for key, value in dataclasses.asdict(rates).items():
        print(f"  {key} = {value:.12g}")
    print(f"hypothesis ({report.regime}): "
          f"{'satisfied' if report.satisfied else 'NOT satisfied'}")
    for c in report.checks:
        print(f"  [{'ok' if c.passed else 'FAIL'}] {c.name}: "
              f"{c.value:.6g} (required {c.required})")
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    record = {
        "rates": dataclasses.asdict(rates),
        "hypothesis": dataclasses.asdict(report),
    }
    (out / "rates.json").write_text(json.dumps(record, sort_keys=True, indent=2) + "\n")
    return 0


def _cmd_validate(args) -> int:
    cfg = load_config(args.config, args.set)
    report = validate_hypothesis(make_model(cfg), make_kernel(cfg))
    for c in report.checks:
        print(f"[{'ok' if c.passed else 'FAIL'}] {c.name}: "
              f"{c.value:.6g} (required {c.required})")
    print(f"regime: {report.regime}; satisfied: {report.satisfied}")
    return 0 if report.satisfied else 2


def _cmd_simulate(args) -> int:
    from .noise import NoiseSpec
    from .particles import save_snapshot, simulate

    cfg = load_config(args.config, args.set)
    model = make_model(cfg)
    snaps, diag = simulate(
        make_initial(cfg), args.n, make_kernel(cfg), make_mollifier(cfg),
        NoiseSpec(model.alpha, model.dim), make_sim(cfg), args.replica, args.seed,
    )
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    for t, state in snaps:
        save_snapshot(state, out / f"particles_t{t:.6f}.bin")
    print(f"wrote {len(snaps)} snapshots to {out} "
          f"(capped evaluations: {diag['capped_evaluations']})")
    return 0


def _cmd_pde(args) -> int:
    from .experiments import density_of_initial
    from .grid import save_field
    from .pde import duhamel_picard, solve

    cfg = load_config(args.config, args.set)
    model = make_model(cfg)
    mu0 = density_of_initial(make_initial(cfg), make_grid(cfg))
    pde_cfg = make_pde(cfg)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    if pde_cfg.picard_iters >= 1:
        final, diag = duhamel_picard(
            mu0, make_kernel(cfg), model.alpha, model.horizon,
            pde_cfg.picard_iters,
            eps_sing=pde_cfg.eps_sing, window_frac=pde_cfg.window_frac,
        )
        save_field(final, out / f"pde_t{model.horizon:.6f}.bin", t=model.horizon)
        print(f"picard gaps: {diag['iterate_gaps']}")
        if diag["non_contraction"]:
            print("warning: iterate gap not contracting (horizon too long?)")
    else:
        snaps, diag = solve(
            mu0, make_kernel(cfg), model.alpha, model.horizon, pde_cfg,
            snapshot_times=cfg["sim.snapshot_times"],
        )
        for t, fld in snaps:
            save_field(fld, out / f"pde_t{t:.6f}.bin", t=t)
        print(f"wrote {len(snaps)} snapshots to {out} "
              f"(max CFL {diag['max_cfl']:.3f}, "
              f"{len(diag['negative_mass_warnings'])} negative-mass warnings)")
    return 0


def _cmd_converge(args) -> int:
    from .experiments import emit_report, run_convergence_study

    cfg = load_config(args.config, args.set)
    plan = make_plan(cfg, seed=args.seed, mode=args.mode)
    report = run_convergence_study(plan)
    paths = emit_report(report, args.out)
    print(f"mode={report.mode} slope={report.fitted_slope:.4f} "
          f"(theory {report.theory_exponent:.4f}) verdict={report.verdict}")
    for name, p in paths.items():
        print(f"  {name}: {p}")
    return 0


_COMMANDS = {
    "rates": _cmd_rates,
    "validate": _cmd_validate,
    "simulate": _cmd_simulate,
    "pde": _cmd_pde,
    "converge": _cmd_converge,
}


def dispatch(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return _COMMANDS[args.command](args)
    except (ConfigError, ParameterError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except Exception as exc:  # runtime fault
        print(f"runtime fault: {exc}", file=sys.stderr)
        return 1


def main() -> None:
    sys.exit(dispatch())


if __name__ == "__main__":
    main()
