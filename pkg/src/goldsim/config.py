"""Experiment configuration: TOML schema, validation, and orchestration.

A config file declares the game, the horizon and seeds, per-player schedules
and delay processes, and output paths.  Validation is strict: unknown keys are
errors, tuning exponents must land in the admissible region (strict or
boundary; INVALID is rejected before any simulation), the initial sampling
radius must fit inside the safety ball, and starting points must be feasible.

Schema (TOML)::

    horizon = 10000
    seeds = [1, 2, 3]
    engine = "auto"              # optional: auto | python | cython

    [game]
    name = "quadratic"           # quadratic | linear | kelly | anti_monotone
    targets = [[0.5]]            # quadratic: per-player target vectors
    # slopes = [[1.0]]           # linear: per-player slopes
    lo = [[0.0]]                 # quadratic/linear: per-player box bounds
    hi = [[1.0]]
    # gains = [2.0, 2.0]         # kelly
    # entry_barrier = 1.0
    # budgets = [1.0, 1.0]

    [outputs]                    # optional
    trace_path = "trace.csv"
    metrics_path = "metrics.csv"
    thin = 1

    [agent]                      # broadcast to every player (or [[players]])
    # x1 = [0.5]                 # optional, default: safety center
    [agent.schedules]
    b = 0.25
    c = 0.75
    # alpha = 0.0                # optional, default: the delay exponent
    # gamma0 = 1.0               # optional, default: set diameter
    # delta0 = 0.25              # optional, default: safety_radius / 2
    [agent.delay]
    kind = "constant"            # constant | power | geometric | scripted
    value = 0
    # shared = true              # one delay process for all players
"""

from __future__ import annotations

import os
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

try:
    import tomllib
except ModuleNotFoundError:  # pragma: no cover - python < 3.11
    import tomli as tomllib

from goldsim.agent import INVALID, GoldSchedules, ParamVerdict
from goldsim.delays import (
    ConstantDelay,
    DelaySchedule,
    GeometricDelay,
    PowerDelay,
    ScriptedDelay,
    scripted_from_file,
)
from goldsim.engine import simulate
from goldsim.errors import ConfigError, GoldSimError
from goldsim.games import GameSpec, anti_monotone_game, kelly_game, linear_game, quadratic_game
from goldsim.geometry import make_box
from goldsim.trace import RunTrace


@dataclass
class PlayerSettings:
    schedules: GoldSchedules
    delay: DelaySchedule
    x1: np.ndarray | None = None

    def verdict(self) -> ParamVerdict:
        return self.schedules.verdict()


@dataclass
class ExperimentConfig:
    game: GameSpec
    horizon: int
    seeds: list[int]
    players: list[PlayerSettings]
    shared_delay: bool = False
    engine: str = "auto"
    trace_path: str | None = None
    metrics_path: str | None = None
    thin: int = 1
    source: dict = field(default_factory=dict, repr=False)

    def verdicts(self) -> list[ParamVerdict]:
        return [p.verdict() for p in self.players]


def _reject_unknown(table: dict, allowed: set[str], where: str) -> None:
    unknown = set(table) - allowed
    if unknown:
        raise ConfigError(f"unknown key(s) in {where}: {sorted(unknown)}")


def _require(table: dict, key: str, where: str):
    if key not in table:
        raise ConfigError(f"missing required key {key!r} in {where}")
    return table[key]


def _build_game(table: dict) -> GameSpec:
    name = _require(table, "name", "[game]")
    if name == "kelly":
        _reject_unknown(table, {"name", "gains", "entry_barrier", "budgets"}, "[game]")
        return kelly_game(
            gains=_require(table, "gains", "[game]"),
            entry_barrier=_require(table, "entry_barrier", "[game]"),
            budgets=_require(table, "budgets", "[game]"),
        )
    if name in ("quadratic", "linear"):
        coeff_key = "targets" if name == "quadratic" else "slopes"
        _reject_unknown(table, {"name", coeff_key, "lo", "hi"}, "[game]")
        coeffs = _require(table, coeff_key, "[game]")
        lo = _require(table, "lo", "[game]")
        hi = _require(table, "hi", "[game]")
        if not (len(coeffs) == len(lo) == len(hi)):
            raise ConfigError(f"[game] {coeff_key}/lo/hi must have one entry per player")
        sets = tuple(make_box(l, h) for l, h in zip(lo, hi))
        factory = quadratic_game if name == "quadratic" else linear_game
        return factory(coeffs, sets)
    if name == "anti_monotone":
        _reject_unknown(table, {"name", "players"}, "[game]")
        return anti_monotone_game(int(table.get("players", 2)))
    raise ConfigError(f"unknown game name {name!r}")


def _build_delay(table: dict, base_dir: Path) -> tuple[DelaySchedule, bool]:
    kind = _require(table, "kind", "delay table")
    shared = bool(table.get("shared", False))
    if kind == "constant":
        _reject_unknown(table, {"kind", "value", "alpha", "shared"}, "delay table")
        return ConstantDelay(
            value=int(table.get("value", 0)), alpha=float(table.get("alpha", 0.0))
        ), shared
    if kind == "power":
        _reject_unknown(table, {"kind", "scale", "exponent", "shared"}, "delay table")
        return PowerDelay(
            scale=float(table.get("scale", 1.0)),
            alpha=float(_require(table, "exponent", "delay table")),
        ), shared
    if kind == "geometric":
        _reject_unknown(table, {"kind", "mean", "cap_exponent", "shared"}, "delay table")
        return GeometricDelay(
            mean=float(_require(table, "mean", "delay table")),
            alpha=float(_require(table, "cap_exponent", "delay table")),
        ), shared
    if kind == "scripted":
        _reject_unknown(table, {"kind", "values", "path", "alpha", "shared"}, "delay table")
        alpha = float(table.get("alpha", 0.0))
        if "path" in table:
            return scripted_from_file(base_dir / table["path"], alpha=alpha), shared
        if "values" in table:
            return ScriptedDelay(
                values=tuple(int(v) for v in table["values"]), alpha=alpha
            ), shared
        raise ConfigError("scripted delay needs 'values' or 'path'")
    raise ConfigError(f"unknown delay kind {kind!r}")


def _build_player(table: dict, game: GameSpec, index: int, base_dir: Path) -> tuple[PlayerSettings, bool]:
    _reject_unknown(table, {"x1", "schedules", "delay"}, f"player table {index}")
    aset = game.action_sets[index]
    delay, shared = _build_delay(_require(table, "delay", f"player {index}"), base_dir)

    sched_table = _require(table, "schedules", f"player {index}")
    _reject_unknown(
        sched_table, {"b", "c", "alpha", "gamma0", "delta0"}, f"player {index} schedules"
    )
    alpha = float(sched_table.get("alpha", delay.alpha))
    if alpha < delay.alpha:
        raise ConfigError(
            f"player {index}: certified alpha {alpha} is below the delay "
            f"schedule's exponent {delay.alpha}"
        )
    schedules = GoldSchedules(
        gamma0=float(sched_table.get("gamma0", aset.diameter())),
        c=float(_require(sched_table, "c", f"player {index} schedules")),
        delta0=float(sched_table.get("delta0", aset.safety_radius / 2.0)),
        b=float(_require(sched_table, "b", f"player {index} schedules")),
        alpha=alpha,
    )
    verdict = schedules.verdict()
    if verdict.region == INVALID:
        raise ConfigError(
            f"player {index}: tuning (b={schedules.b}, c={schedules.c}, "
            f"alpha={schedules.alpha}) is outside the admissible region; "
            f"violated: {list(verdict.violated)}"
        )
    if schedules.delta0 > aset.safety_radius:
        raise ConfigError(
            f"player {index}: delta0 = {schedules.delta0} exceeds the safety "
            f"radius {aset.safety_radius}"
        )
    x1 = None
    if "x1" in table:
        x1 = np.atleast_1d(np.asarray(table["x1"], dtype=np.float64))
        if not aset.contains(x1):
            raise ConfigError(f"player {index}: x1 = {x1} outside the action set")
    return PlayerSettings(schedules=schedules, delay=delay, x1=x1), shared


def build_config(data: dict, base_dir: Path | str = ".") -> ExperimentConfig:
    """Validate a parsed config mapping and construct all run objects."""
    base_dir = Path(base_dir)
    _reject_unknown(
        data,
        {"horizon", "seeds", "engine", "game", "outputs", "agent", "players"},
        "top level",
    )
    horizon = int(_require(data, "horizon", "top level"))
    if horizon < 1:
        raise ConfigError(f"horizon must be >= 1, got {horizon}")
    seeds = [int(s) for s in _require(data, "seeds", "top level")]
    if not seeds:
        raise ConfigError("seeds must be a nonempty list")
    engine = str(data.get("engine", "auto"))
    if engine not in ("auto", "python", "cython"):
        raise ConfigError(f"unknown engine {engine!r}")

    game = _build_game(_require(data, "game", "top level"))

    outputs = data.get("outputs", {})
    _reject_unknown(outputs, {"trace_path", "metrics_path", "thin"}, "[outputs]")
    thin = int(outputs.get("thin", 1))
    if thin < 1:
        raise ConfigError(f"thin must be >= 1, got {thin}")

    if ("agent" in data) == ("players" in data):
        raise ConfigError("provide exactly one of [agent] (broadcast) or [[players]]")
    players: list[PlayerSettings] = []
    shared = False
    if "agent" in data:
        for i in range(game.players):
            p, shared = _build_player(data["agent"], game, i, base_dir)
            players.append(p)
    else:
        tables = data["players"]
        if len(tables) != game.players:
            raise ConfigError(
                f"[[players]] has {len(tables)} entries but the game has "
                f"{game.players} players"
            )
        shared_flags = set()
        for i, table in enumerate(tables):
            p, sh = _build_player(table, game, i, base_dir)
            players.append(p)
            shared_flags.add(sh)
        if True in shared_flags:
            raise ConfigError(
                "delay.shared requires the broadcast [agent] form so a single "
                "delay process can be defined once"
            )
        shared = False

    return ExperimentConfig(
        game=game,
        horizon=horizon,
        seeds=seeds,
        players=players,
        shared_delay=shared,
        engine=engine,
        trace_path=str(outputs["trace_path"]) if "trace_path" in outputs else None,
        metrics_path=str(outputs["metrics_path"]) if "metrics_path" in outputs else None,
        thin=thin,
        source=data,
    )


def load_config(path) -> ExperimentConfig:
    path = Path(path)
    with open(path, "rb") as fh:
        try:
            data = tomllib.load(fh)
        except tomllib.TOMLDecodeError as exc:
            raise ConfigError(f"{path}: {exc}") from exc
    try:
        return build_config(data, base_dir=path.parent)
    except ConfigError:
        raise
    except GoldSimError as exc:
        # geometry/schedule construction failures surfaced while building a
        # config are validation failures, not runtime errors
        raise ConfigError(str(exc)) from exc


def max_workers() -> int:
    """Run-level parallelism cap: GOLD_SIM_THREADS or the CPU count."""
    env = os.environ.get("GOLD_SIM_THREADS", "").strip()
    if env:
        try:
            value = int(env)
        except ValueError as exc:
            raise ConfigError(f"GOLD_SIM_THREADS must be an integer, got {env!r}") from exc
        if value < 1:
            raise ConfigError(f"GOLD_SIM_THREADS must be >= 1, got {value}")
        return value
    return os.cpu_count() or 1


def run_experiment(
    cfg: ExperimentConfig, seed: int, engine: str | None = None
) -> RunTrace:
    """One deterministic run of the configured experiment."""
    return simulate(
        game=cfg.game,
        schedules=[p.schedules for p in cfg.players],
        delay_schedules=[p.delay for p in cfg.players],
        horizon=cfg.horizon,
        seed=seed,
        x1=[p.x1 for p in cfg.players],
        shared_delay=cfg.shared_delay,
        engine=engine or cfg.engine,
    )
