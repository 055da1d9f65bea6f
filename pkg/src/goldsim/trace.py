"""Per-round run records and their CSV round-trip.

One row per (round, player): pivot, played action, generated reward, the delay
that reward triggered, the dequeued head origin (-1 when the pool was empty),
the pool size after the round, and the cumulative count of empty rounds.
Vector-valued cells are semicolon-joined; floats are written in shortest
round-trip decimal so that read(write(trace)) is bit-exact.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field

import numpy as np

from goldsim.pool import head_sequence

CSV_HEADER = (
    "t",
    "player",
    "pivot",
    "played",
    "reward",
    "triggered_delay",
    "head",
    "pool_size",
    "empty_rounds",
)


@dataclass
class RunTrace:
    horizon: int
    players: int
    dims: tuple[int, ...]
    rounds: np.ndarray  # recorded round numbers, ascending
    pivots: list[np.ndarray]  # per player: (R, dim_i)
    played: list[np.ndarray]  # per player: (R, dim_i)
    rewards: np.ndarray  # (N, R)
    delays: np.ndarray  # (N, R) int64
    heads: np.ndarray  # (N, R) int64, -1 = empty pool
    pool_sizes: np.ndarray  # (N, R) int64
    empty_counts: np.ndarray  # (N, R) int64, cumulative
    seed: int | None = None
    engine: str = ""
    final_pivot: list[np.ndarray] | None = None
    max_lag: np.ndarray | None = None
    max_pool: np.ndarray | None = None
    meta: dict = field(default_factory=dict)

    @property
    def is_full(self) -> bool:
        """True when every round 1..horizon is recorded."""
        return self.rounds.size == self.horizon and self.rounds[0] == 1

    def last_pivot(self, player: int) -> np.ndarray:
        """Post-run pivot if available, else the last recorded one."""
        if self.final_pivot is not None:
            return self.final_pivot[player]
        return self.pivots[player][-1]

    def profile_matrix(self) -> list[np.ndarray]:
        """Played actions per player as (R, dim_i) matrices."""
        return self.played


def _fmt(x: float) -> str:
    return repr(float(x))


def _fmt_vec(v: np.ndarray) -> str:
    return ";".join(_fmt(x) for x in v)


def _parse_vec(cell: str) -> np.ndarray:
    return np.array([float(x) for x in cell.split(";")], dtype=np.float64)


def write_trace(trace: RunTrace, path, thin: int = 1) -> None:
    """Write the trace as CSV, keeping every thin-th recorded round."""
    if thin < 1:
        raise ValueError(f"thin must be >= 1, got {thin}")
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(CSV_HEADER)
        for k, t in enumerate(trace.rounds):
            if t % thin != 0:
                continue
            for i in range(trace.players):
                writer.writerow(
                    (
                        int(t),
                        i,
                        _fmt_vec(trace.pivots[i][k]),
                        _fmt_vec(trace.played[i][k]),
                        _fmt(trace.rewards[i, k]),
                        int(trace.delays[i, k]),
                        int(trace.heads[i, k]),
                        int(trace.pool_sizes[i, k]),
                        int(trace.empty_counts[i, k]),
                    )
                )


def read_trace(path) -> RunTrace:
    """Load a trace CSV written by write_trace."""
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = tuple(next(reader))
        if header != CSV_HEADER:
            raise ValueError(f"unexpected trace header {header!r}")
        rows = list(reader)
    if not rows:
        raise ValueError("trace file contains no rows")
    players = max(int(r[1]) for r in rows) + 1
    rounds = sorted({int(r[0]) for r in rows})
    index = {t: k for k, t in enumerate(rounds)}
    n_rec = len(rounds)
    dims = [None] * players
    for r in rows:
        dims[int(r[1])] = len(r[2].split(";"))
    pivots = [np.empty((n_rec, d)) for d in dims]
    played = [np.empty((n_rec, d)) for d in dims]
    rewards = np.empty((players, n_rec))
    delays = np.empty((players, n_rec), dtype=np.int64)
    heads = np.empty((players, n_rec), dtype=np.int64)
    pool_sizes = np.empty((players, n_rec), dtype=np.int64)
    empty_counts = np.empty((players, n_rec), dtype=np.int64)
    for r in rows:
        t, i = int(r[0]), int(r[1])
        k = index[t]
        pivots[i][k] = _parse_vec(r[2])
        played[i][k] = _parse_vec(r[3])
        rewards[i, k] = float(r[4])
        delays[i, k] = int(r[5])
        heads[i, k] = int(r[6])
        pool_sizes[i, k] = int(r[7])
        empty_counts[i, k] = int(r[8])
    return RunTrace(
        horizon=rounds[-1],
        players=players,
        dims=tuple(dims),
        rounds=np.array(rounds, dtype=np.int64),
        pivots=pivots,
        played=played,
        rewards=rewards,
        delays=delays,
        heads=heads,
        pool_sizes=pool_sizes,
        empty_counts=empty_counts,
    )


def verify_replay(trace: RunTrace) -> None:
    """Re-derive the pool evolution from the recorded delays and compare.

    Requires a full (unthinned) trace.  Raises AssertionError on the first
    mismatch; passing means the recorded head/pool-size/empty columns are
    exactly what the FIFO pooling rule produces for the recorded delays.
    """
    if not trace.is_full:
        raise ValueError("replay verification requires a full trace (thin = 1)")
    for i in range(trace.players):
        out = head_sequence(trace.delays[i])
        assert np.array_equal(out["heads"], trace.heads[i]), f"player {i}: head mismatch"
        assert np.array_equal(out["pool_sizes"], trace.pool_sizes[i])
        assert np.array_equal(out["empty_counts"], trace.empty_counts[i])
