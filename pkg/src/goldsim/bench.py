"""Benchmark the compiled engine against the pure-Python reference.

Runs the same seeded experiments through both engines, checks the traces are
bit-identical, and reports rounds/second and the speedup.  Exposed as the
``bench`` CLI subcommand.
"""

from __future__ import annotations

import time
from dataclasses import dataclass

import numpy as np

import goldsim
from goldsim.agent import default_schedules
from goldsim.delays import ConstantDelay, PowerDelay
from goldsim.engine import simulate
from goldsim.games import kelly_game, quadratic_game
from goldsim.geometry import make_interval


@dataclass
class BenchResult:
    name: str
    horizon: int
    players: int
    python_seconds: float
    cython_seconds: float
    identical: bool

    @property
    def speedup(self) -> float:
        return self.python_seconds / self.cython_seconds

    def row(self) -> str:
        agent_rounds = self.horizon * self.players
        return (
            f"{self.name:<12} T={self.horizon:<8} "
            f"python {agent_rounds / self.python_seconds:>12,.0f} rounds/s   "
            f"cython {agent_rounds / self.cython_seconds:>12,.0f} rounds/s   "
            f"speedup {self.speedup:>7.1f}x   "
            f"identical={'yes' if self.identical else 'NO'}"
        )


def _traces_identical(a, b) -> bool:
    checks = [
        all(np.array_equal(x, y) for x, y in zip(a.pivots, b.pivots)),
        all(np.array_equal(x, y) for x, y in zip(a.played, b.played)),
        np.array_equal(a.rewards, b.rewards),
        np.array_equal(a.heads, b.heads),
        np.array_equal(a.pool_sizes, b.pool_sizes),
        np.array_equal(a.empty_counts, b.empty_counts),
    ]
    return all(checks)


def _time_engine(engine, game, schedules, delays, horizon, seed, shared, repeat):
    best = float("inf")
    trace = None
    for _ in range(repeat):
        t0 = time.perf_counter()
        trace = simulate(
            game, schedules, delays, horizon, seed,
            shared_delay=shared, engine=engine,
        )
        best = min(best, time.perf_counter() - t0)
    return best, trace


def run_benchmarks(horizon: int = 50_000, repeat: int = 3, seed: int = 0) -> list[BenchResult]:
    if not goldsim.KERNEL_AVAILABLE:
        raise RuntimeError("compiled kernel not available; nothing to compare")
    cases = []
    quad = quadratic_game([[0.5]], [make_interval(0.0, 1.0)])
    cases.append(
        ("quadratic", quad, [default_schedules(quad.action_sets[0], b=0.25, c=0.75)],
         [ConstantDelay(0)], False)
    )
    kelly = kelly_game([2.0, 2.0], 1.0, [1.0, 1.0])
    cases.append(
        ("kelly", kelly,
         [default_schedules(s, b=0.2, c=0.85, alpha=0.2) for s in kelly.action_sets],
         [PowerDelay(scale=1.0, alpha=0.2)] * 2, True)
    )
    results = []
    for name, game, schedules, delays, shared in cases:
        t_py, trace_py = _time_engine("python", game, schedules, delays, horizon, seed, shared, repeat)
        t_cy, trace_cy = _time_engine("cython", game, schedules, delays, horizon, seed, shared, repeat)
        results.append(
            BenchResult(
                name=name,
                horizon=horizon,
                players=game.players,
                python_seconds=t_py,
                cython_seconds=t_cy,
                identical=_traces_identical(trace_py, trace_cy),
            )
        )
    return results
