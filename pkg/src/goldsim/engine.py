"""Simulation engines: the synchronized multi-agent round loop.

Each round proceeds in lockstep: every player perturbs their pivot and plays,
payoffs are computed from the joint *played* profile, each reward is stamped
with the delay it triggered, and then every player enqueues whatever arrived,
dequeues at most one (oldest-origin) record, and updates their pivot.

Two engines produce bit-identical traces:

  * ``python``: the reference implementation, built from the module-level
    primitives (perturb, RewardPool, reconstruct_gradient, project); works for
    any GameSpec and any action-set kind.
  * ``cython``: a compiled kernel for the hot case (one-dimensional box
    players, closed-form game), roughly two orders of magnitude faster.

``engine="auto"`` picks the kernel whenever the configuration is eligible.
All randomness is drawn up front from per-player child streams of a single
seed, so a run is a pure function of (inputs, seed) and the two engines
consume identical random numbers.
"""

from __future__ import annotations

import numpy as np

from goldsim import _kernel, KERNEL_AVAILABLE
from goldsim.agent import GoldSchedules
from goldsim.delays import DelaySchedule
from goldsim.errors import ConfigError, GoldSimError, InfeasibleRadiusError, SimulationError
from goldsim.games import GameSpec
from goldsim.geometry import Box
from goldsim.pool import FeedbackItem, RewardPool
from goldsim.spsa import perturb, reconstruct_gradient, sample_directions
from goldsim.trace import RunTrace

_KERNEL_KINDS = {"quadratic": 0, "kelly": 1, "linear": 2}


def kernel_eligible(game: GameSpec) -> bool:
    """True when the compiled engine can run this game."""
    return (
        KERNEL_AVAILABLE
        and game.kernel is not None
        and all(isinstance(s, Box) and s.dim == 1 for s in game.action_sets)
    )


def _resolve_engine(engine: str, game: GameSpec) -> str:
    if engine == "auto":
        return "cython" if kernel_eligible(game) else "python"
    if engine == "cython":
        if not KERNEL_AVAILABLE:
            raise ConfigError("compiled kernel not available in this build")
        if not kernel_eligible(game):
            raise ConfigError(
                f"game {game.name!r} is not eligible for the compiled engine"
            )
        return "cython"
    if engine == "python":
        return "python"
    raise ConfigError(f"unknown engine {engine!r}")


def _draw_run_randomness(
    game: GameSpec,
    delay_schedules: list[DelaySchedule],
    horizon: int,
    seed: int,
    shared_delay: bool,
):
    """Pre-draw directions and delays from per-player child streams.

    Child streams are spawned in a fixed order (direction stream then delay
    stream, player by player), so the layout is part of the determinism
    contract.  With ``shared_delay`` every player reuses player 0's delay
    sequence (one shared delay process).
    """
    n = game.players
    children = np.random.SeedSequence(seed).spawn(2 * n)
    directions = []
    for i in range(n):
        rng = np.random.default_rng(children[2 * i])
        directions.append(sample_directions(game.dims[i], rng, horizon))
    delays = np.empty((n, horizon), dtype=np.int64)
    if shared_delay:
        rng = np.random.default_rng(children[1])
        row = delay_schedules[0].sequence(horizon, rng)
        for i in range(n):
            delays[i] = row
    else:
        for i in range(n):
            rng = np.random.default_rng(children[2 * i + 1])
            delays[i] = delay_schedules[i].sequence(horizon, rng)
    return directions, delays


def simulate(
    game: GameSpec,
    schedules: list[GoldSchedules],
    delay_schedules: list[DelaySchedule],
    horizon: int,
    seed: int,
    x1: list | None = None,
    shared_delay: bool = False,
    engine: str = "auto",
) -> RunTrace:
    """Run one experiment and return its full trace.

    ``schedules`` and ``delay_schedules`` hold one entry per player
    (broadcasting a single table to all players is the config layer's job).
    ``x1`` entries may be None for the default start, the safety center.
    """
    n = game.players
    if len(schedules) != n or len(delay_schedules) != n:
        raise ConfigError("need one schedule and one delay process per player")
    if shared_delay and any(d != delay_schedules[0] for d in delay_schedules):
        raise ConfigError("shared_delay requires identical delay schedules")
    if horizon < 1:
        raise ConfigError(f"horizon must be >= 1, got {horizon}")
    for sched, aset in zip(schedules, game.action_sets):
        if sched.delta0 > aset.safety_radius:
            raise InfeasibleRadiusError(sched.delta0, aset.safety_radius)

    starts = []
    for i, aset in enumerate(game.action_sets):
        x0 = None if x1 is None else x1[i]
        if x0 is None:
            starts.append(np.array(aset.safety_center, dtype=np.float64))
        else:
            x0 = np.atleast_1d(np.asarray(x0, dtype=np.float64))
            if not aset.contains(x0):
                raise ConfigError(f"player {i}: x1 = {x0} outside the action set")
            starts.append(x0)

    directions, delays = _draw_run_randomness(
        game, delay_schedules, horizon, seed, shared_delay
    )
    gamma = np.stack([s.gamma_sequence(horizon) for s in schedules])
    delta = np.stack([s.delta_sequence(horizon) for s in schedules])

    resolved = _resolve_engine(engine, game)
    if resolved == "cython":
        trace = _run_kernel(game, starts, directions, delays, gamma, delta, horizon)
    else:
        trace = _run_python(game, starts, directions, delays, gamma, delta, horizon)
    trace.seed = seed
    trace.engine = resolved
    return trace


def _arrival_csr(delay_row: np.ndarray, horizon: int):
    """CSR layout of reward origins by arrival round (arrivals past T dropped)."""
    origins = np.arange(1, horizon + 1, dtype=np.int64)
    arrive = origins + delay_row
    keep = arrive <= horizon
    order = np.argsort(arrive[keep], kind="stable")
    kept = origins[keep][order]
    counts = np.bincount(arrive[keep], minlength=horizon + 1)[1:]
    offsets = np.zeros(horizon + 1, dtype=np.int64)
    np.cumsum(counts, out=offsets[1:])
    padded = np.zeros(horizon, dtype=np.int64)
    padded[: kept.size] = kept
    return offsets, padded


def _run_kernel(game, starts, directions, delays, gamma, delta, horizon) -> RunTrace:
    n = game.players
    lo = np.array([s.lo[0] for s in game.action_sets])
    hi = np.array([s.hi[0] for s in game.action_sets])
    center = np.array([s.safety_center[0] for s in game.action_sets])
    radius = np.array([s.safety_radius for s in game.action_sets])
    x0 = np.array([x[0] for x in starts])
    dirs = np.ascontiguousarray(np.stack([d[:, 0] for d in directions]))

    offs = np.empty((n, horizon + 1), dtype=np.int64)
    orig = np.empty((n, horizon), dtype=np.int64)
    for i in range(n):
        offs[i], orig[i] = _arrival_csr(delays[i], horizon)

    pivots = np.empty((n, horizon))
    played = np.empty((n, horizon))
    rewards = np.empty((n, horizon))
    heads = np.empty((n, horizon), dtype=np.int64)
    pool_sizes = np.empty((n, horizon), dtype=np.int64)
    empty_counts = np.empty((n, horizon), dtype=np.int64)
    final_pivot = np.empty(n)
    max_lag = np.zeros(n, dtype=np.int64)
    max_pool = np.zeros(n, dtype=np.int64)

    _kernel.simulate_rounds(
        _KERNEL_KINDS[game.kernel.kind],
        np.ascontiguousarray(game.kernel.coeffs),
        game.kernel.entry_barrier,
        lo,
        hi,
        center,
        radius,
        x0,
        dirs,
        np.ascontiguousarray(gamma),
        np.ascontiguousarray(delta),
        offs,
        orig,
        pivots,
        played,
        rewards,
        heads,
        pool_sizes,
        empty_counts,
        final_pivot,
        max_lag,
        max_pool,
    )
    return RunTrace(
        horizon=horizon,
        players=n,
        dims=game.dims,
        rounds=np.arange(1, horizon + 1, dtype=np.int64),
        pivots=[pivots[i][:, None] for i in range(n)],
        played=[played[i][:, None] for i in range(n)],
        rewards=rewards,
        delays=delays,
        heads=heads,
        pool_sizes=pool_sizes,
        empty_counts=empty_counts,
        final_pivot=[final_pivot[i : i + 1].copy() for i in range(n)],
        max_lag=max_lag,
        max_pool=max_pool,
    )


def _run_python(game, starts, directions, delays, gamma, delta, horizon) -> RunTrace:
    n = game.players
    dims = game.dims
    sets = game.action_sets
    pools = [RewardPool() for _ in range(n)]
    buckets: list[list[list[FeedbackItem]]] = [
        [[] for _ in range(horizon + 1)] for _ in range(n)
    ]
    pivots = [np.empty((horizon, d)) for d in dims]
    played = [np.empty((horizon, d)) for d in dims]
    rewards = np.empty((n, horizon))
    heads = np.empty((n, horizon), dtype=np.int64)
    pool_sizes = np.empty((n, horizon), dtype=np.int64)
    empty_counts = np.empty((n, horizon), dtype=np.int64)
    x = [s.copy() for s in starts]

    for t in range(1, horizon + 1):
        ti = t - 1
        try:
            profile = []
            for i in range(n):
                pivots[i][ti] = x[i]
                action, _ = perturb(x[i], sets[i], delta[i, ti], directions[i][ti])
                played[i][ti] = action
                profile.append(action)
            profile = tuple(profile)
            for i in range(n):
                reward = game.payoff(i, profile)
                rewards[i, ti] = reward
                arrive = t + int(delays[i, ti])
                if arrive <= horizon:
                    buckets[i][arrive].append(
                        FeedbackItem(
                            origin=t,
                            reward=reward,
                            direction=directions[i][ti],
                            radius=delta[i, ti],
                        )
                    )
            for i in range(n):
                pools[i].enqueue_batch(buckets[i][t])
                item = pools[i].dequeue_head(t)
                if item is not None:
                    heads[i, ti] = item.origin
                    grad = reconstruct_gradient(item, dims[i])
                    x[i] = sets[i].project(x[i] + gamma[i, ti] * grad)
                else:
                    heads[i, ti] = -1
                pool_sizes[i, ti] = len(pools[i])
                empty_counts[i, ti] = pools[i].stats.empty_rounds
        except GoldSimError as exc:
            raise SimulationError(t, exc) from exc

    return RunTrace(
        horizon=horizon,
        players=n,
        dims=dims,
        rounds=np.arange(1, horizon + 1, dtype=np.int64),
        pivots=pivots,
        played=played,
        rewards=rewards,
        delays=delays,
        heads=heads,
        pool_sizes=pool_sizes,
        empty_counts=empty_counts,
        final_pivot=[xi.copy() for xi in x],
        max_lag=np.array([p.stats.max_lag for p in pools], dtype=np.int64),
        max_pool=np.array([p.stats.max_pool_size for p in pools], dtype=np.int64),
    )
