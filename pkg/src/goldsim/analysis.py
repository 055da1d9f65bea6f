"""Post-run metrics, sweep orchestration, and the metrics CSV format.

``run_metrics`` reduces one trace to the per-player summary row used across
the project: realized regret, distance of the final pivot profile to the
game's equilibrium, pool statistics, and the three error-series totals.
``run_sweep`` runs a (b, c, alpha, T) grid over the configured seeds (in
parallel, capped by GOLD_SIM_THREADS) and fits log-log regret slopes across
horizons.
"""

from __future__ import annotations

import csv
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace

import numpy as np

from goldsim.agent import INVALID
from goldsim.config import ExperimentConfig, max_workers, run_experiment
from goldsim.equilibrium import (
    EquilibriumResult,
    regret_from_trace,
    series_diagnostics,
    solve_equilibrium,
)
from goldsim.errors import ConfigError
from goldsim.trace import RunTrace

METRICS_HEADER = (
    "run_id",
    "T",
    "regret",
    "final_pivot_distance",
    "empty_rounds",
    "max_lag",
    "A_sum",
    "B_sum",
    "C_sum",
)

SWEEP_HEADER = (
    "b",
    "c",
    "alpha",
    "T",
    "mean_regret",
    "stderr_regret",
    "mean_final_distance",
    "stderr_final_distance",
    "n_seeds",
    "fitted_slope",
)


def final_profile_distance(trace: RunTrace, eq: EquilibriumResult) -> float:
    """Joint-profile distance of the post-run pivot to the equilibrium."""
    total = 0.0
    for i in range(trace.players):
        diff = trace.last_pivot(i) - np.asarray(eq.point[i])
        total += float(diff @ diff)
    return math.sqrt(total)


def run_metrics(
    trace: RunTrace,
    cfg: ExperimentConfig,
    eq: EquilibriumResult | None = None,
    run_id: str = "run",
    solver_tol: float = 1e-8,
) -> list[dict]:
    """One metrics row per player for a completed run."""
    if eq is None:
        eq = solve_equilibrium(cfg.game, tol=1e-9)
    dist = final_profile_distance(trace, eq) if eq.converged else float("nan")
    rows = []
    for i in range(trace.players):
        report = regret_from_trace(trace, cfg.game, player=i, solver_tol=solver_tol)
        series = series_diagnostics(trace, cfg.players[i].schedules, player=i)
        if trace.max_lag is not None:
            max_lag = int(trace.max_lag[i])
        else:
            # traces loaded from CSV carry no run stats; recover the lag from
            # the recorded heads
            used = trace.heads[i] >= 1
            lags = trace.rounds[used] - trace.heads[i][used]
            max_lag = int(lags.max()) if lags.size else 0
        rows.append(
            {
                "run_id": f"{run_id}/p{i}",
                "T": trace.horizon,
                "regret": report.cumulative,
                "final_pivot_distance": dist,
                "empty_rounds": int(trace.empty_counts[i, -1]),
                "max_lag": max_lag,
                "A_sum": float(series["A_partial"][-1]),
                "B_sum": float(series["B_partial"][-1]),
                "C_sum": float(series["C_partial"][-1]),
            }
        )
    return rows


def write_metrics(rows: list[dict], path) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=METRICS_HEADER)
        writer.writeheader()
        writer.writerows(rows)


# ---------------------------------------------------------------------------
# Sweeps
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class GridPoint:
    b: float
    c: float
    alpha: float
    horizon: int


def grid_from_table(points: list[dict]) -> list[GridPoint]:
    out = []
    for k, p in enumerate(points):
        missing = {"b", "c", "alpha", "T"} - set(p)
        if missing:
            raise ConfigError(f"grid point {k} is missing {sorted(missing)}")
        out.append(
            GridPoint(b=float(p["b"]), c=float(p["c"]), alpha=float(p["alpha"]), horizon=int(p["T"]))
        )
    return out


def fit_loglog_slope(horizons, values) -> float:
    """Least-squares slope of log(values) against log(horizons)."""
    x = np.log(np.asarray(horizons, dtype=float))
    y = np.log(np.asarray(values, dtype=float))
    return float(np.polyfit(x, y, 1)[0])


def _point_config(cfg: ExperimentConfig, point: GridPoint) -> ExperimentConfig:
    players = []
    for p in cfg.players:
        schedules = replace(p.schedules, b=point.b, c=point.c, alpha=point.alpha)
        verdict = schedules.verdict()
        if verdict.region == INVALID:
            raise ConfigError(
                f"grid point (b={point.b}, c={point.c}, alpha={point.alpha}) "
                f"is inadmissible; violated: {list(verdict.violated)}"
            )
        players.append(replace(p, schedules=schedules))
    return replace(cfg, players=players, horizon=point.horizon)


def run_sweep(
    cfg: ExperimentConfig,
    grid: list[GridPoint],
    engine: str | None = None,
    player: int = 0,
    solver_tol: float = 1e-8,
    grid_check: bool = False,
) -> dict:
    """Mean regret and final equilibrium distance per grid point, plus slopes.

    Returns {"rows": [...], "slopes": {(b, c, alpha): slope}} where each row
    aggregates over the config's seeds and slopes are log-log fits of mean
    regret against T within each (b, c, alpha) group having >= 2 horizons.
    """
    if not grid:
        return {"rows": [], "slopes": {}}
    eq = solve_equilibrium(cfg.game, tol=1e-9)
    rows = []
    for point in grid:
        point_cfg = _point_config(cfg, point)

        def one_seed(seed: int):
            trace = run_experiment(point_cfg, seed, engine=engine)
            reg = regret_from_trace(
                trace, cfg.game, player=player, solver_tol=solver_tol,
                grid_check=grid_check,
            ).cumulative
            dist = final_profile_distance(trace, eq) if eq.converged else float("nan")
            return reg, dist

        with ThreadPoolExecutor(max_workers=max_workers()) as pool:
            results = list(pool.map(one_seed, point_cfg.seeds))
        regs = np.array([r for r, _ in results])
        dists = np.array([d for _, d in results])
        n = len(results)
        sem = 1.0 / math.sqrt(n) if n > 1 else float("nan")
        rows.append(
            {
                "b": point.b,
                "c": point.c,
                "alpha": point.alpha,
                "T": point.horizon,
                "mean_regret": float(regs.mean()),
                "stderr_regret": float(regs.std(ddof=1) * sem) if n > 1 else float("nan"),
                "mean_final_distance": float(dists.mean()),
                "stderr_final_distance": float(dists.std(ddof=1) * sem) if n > 1 else float("nan"),
                "n_seeds": n,
                "fitted_slope": float("nan"),
            }
        )

    slopes: dict[tuple[float, float, float], float] = {}
    groups: dict[tuple[float, float, float], list[dict]] = {}
    for row in rows:
        groups.setdefault((row["b"], row["c"], row["alpha"]), []).append(row)
    for key, group in groups.items():
        if len({r["T"] for r in group}) >= 2:
            slope = fit_loglog_slope(
                [r["T"] for r in group], [max(r["mean_regret"], 1e-300) for r in group]
            )
            slopes[key] = slope
            for r in group:
                r["fitted_slope"] = slope
    return {"rows": rows, "slopes": slopes}


def write_sweep(result: dict, path) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=SWEEP_HEADER)
        writer.writeheader()
        writer.writerows(result["rows"])
