"""Command-line interface.

Subcommands::

    goldsim run     --config CFG --seed N --out TRACE.csv [--engine E]
    goldsim sweep   --config CFG --grid GRID.toml --out SWEEP.csv [--engine E]
    goldsim analyze --trace TRACE.csv --config CFG --out METRICS.csv
    goldsim check   --config CFG
    goldsim bench   [--horizon N] [--repeat K]

Exit codes: 0 success, 2 validation failure, 1 runtime error.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

try:
    import tomllib
except ModuleNotFoundError:  # pragma: no cover - python < 3.11
    import tomli as tomllib

import goldsim
from goldsim.analysis import (
    grid_from_table,
    run_metrics,
    run_sweep,
    write_metrics,
    write_sweep,
)
from goldsim.config import load_config, run_experiment
from goldsim.errors import ConfigError, GoldSimError
from goldsim.trace import read_trace, write_trace

EXIT_OK = 0
EXIT_RUNTIME = 1
EXIT_VALIDATION = 2


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="goldsim",
        description="Gradient-free online learning with delayed rewards: "
        "simulation, sweeps, and diagnostics.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="run one seeded experiment, write the trace CSV")
    p_run.add_argument("--config", required=True, type=Path)
    p_run.add_argument("--seed", required=True, type=int)
    p_run.add_argument("--out", required=True, type=Path)
    p_run.add_argument("--engine", choices=("auto", "python", "cython"), default=None)

    p_sweep = sub.add_parser("sweep", help="run a (b, c, alpha, T) grid over all seeds")
    p_sweep.add_argument("--config", required=True, type=Path)
    p_sweep.add_argument("--grid", required=True, type=Path)
    p_sweep.add_argument("--out", required=True, type=Path)
    p_sweep.add_argument("--engine", choices=("auto", "python", "cython"), default=None)

    p_an = sub.add_parser("analyze", help="compute metrics and series diagnostics for a trace")
    p_an.add_argument("--trace", required=True, type=Path)
    p_an.add_argument("--config", required=True, type=Path)
    p_an.add_argument("--out", required=True, type=Path)

    p_check = sub.add_parser("check", help="validate a config and print the region verdict")
    p_check.add_argument("--config", required=True, type=Path)

    p_bench = sub.add_parser("bench", help="compare the compiled and pure-Python engines")
    p_bench.add_argument("--horizon", type=int, default=50_000)
    p_bench.add_argument("--repeat", type=int, default=3)
    return parser


def _cmd_run(args) -> int:
    cfg = load_config(args.config)
    trace = run_experiment(cfg, args.seed, engine=args.engine)
    write_trace(trace, args.out, thin=cfg.thin)
    print(f"wrote {args.out} (engine={trace.engine}, T={trace.horizon}, "
          f"players={trace.players})")
    return EXIT_OK


def _cmd_sweep(args) -> int:
    cfg = load_config(args.config)
    with open(args.grid, "rb") as fh:
        grid_data = tomllib.load(fh)
    unknown = set(grid_data) - {"points"}
    if unknown:
        raise ConfigError(f"unknown key(s) in grid file: {sorted(unknown)}")
    grid = grid_from_table(grid_data.get("points", []))
    result = run_sweep(cfg, grid, engine=args.engine)
    write_sweep(result, args.out)
    print(f"wrote {args.out} ({len(result['rows'])} grid points)")
    for key, slope in sorted(result["slopes"].items()):
        b, c, alpha = key
        print(f"  slope(b={b}, c={c}, alpha={alpha}) = {slope:.4f}")
    return EXIT_OK


def _cmd_analyze(args) -> int:
    cfg = load_config(args.config)
    trace = read_trace(args.trace)
    if not trace.is_full:
        raise ConfigError(
            "analyze requires an unthinned trace (regret and series "
            "diagnostics need every round)"
        )
    rows = run_metrics(trace, cfg, run_id=args.trace.stem)
    write_metrics(rows, args.out)
    print(f"wrote {args.out} ({len(rows)} rows)")
    return EXIT_OK


def _cmd_check(args) -> int:
    cfg = load_config(args.config)
    for i, verdict in enumerate(cfg.verdicts()):
        sched = cfg.players[i].schedules
        print(
            f"player {i}: region={verdict.region} "
            f"(b={sched.b}, c={sched.c}, alpha={sched.alpha}, "
            f"gamma0={sched.gamma0}, delta0={sched.delta0})"
        )
    print(f"config OK: game={cfg.game.name}, players={cfg.game.players}, "
          f"horizon={cfg.horizon}, seeds={len(cfg.seeds)}")
    return EXIT_OK


def _cmd_bench(args) -> int:
    from goldsim.bench import run_benchmarks

    if not goldsim.KERNEL_AVAILABLE:
        print("compiled kernel not available in this build", file=sys.stderr)
        return EXIT_RUNTIME
    results = run_benchmarks(horizon=args.horizon, repeat=args.repeat)
    for r in results:
        print(r.row())
    if not all(r.identical for r in results):
        print("ERROR: engines disagree", file=sys.stderr)
        return EXIT_RUNTIME
    return EXIT_OK


_COMMANDS = {
    "run": _cmd_run,
    "sweep": _cmd_sweep,
    "analyze": _cmd_analyze,
    "check": _cmd_check,
    "bench": _cmd_bench,
}


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        return _COMMANDS[args.command](args)
    except (ConfigError, FileNotFoundError, tomllib.TOMLDecodeError) as exc:
        print(f"validation error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except GoldSimError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME
    except Exception as exc:  # keep the exit-code contract for unexpected bugs
        print(f"internal error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
