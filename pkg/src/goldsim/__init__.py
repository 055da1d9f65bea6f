"""Gradient-free online learning with delayed rewards.

Simulation library for bandit online optimization and multi-player monotone
games under delayed, payoff-only feedback: one-point gradient estimation with
a feasibility adjustment, FIFO reward pooling, projected gradient updates,
equilibrium oracles, and regret/convergence diagnostics.

The hot per-round loop has a compiled (Cython) implementation selected
automatically at import; the pure-Python engine is the reference and the
fallback, and the two are bit-identical on eligible configurations.
"""

try:
    from goldsim import _kernel

    KERNEL_AVAILABLE = True
except ImportError:  # pragma: no cover - depends on build environment
    _kernel = None
    KERNEL_AVAILABLE = False

from goldsim import geometry
from goldsim.agent import (
    GoldAgent,
    GoldSchedules,
    default_schedules,
    default_tuning,
    validate_params,
)
from goldsim.config import ExperimentConfig, load_config, run_experiment
from goldsim.delays import (
    ConstantDelay,
    DelaySchedule,
    GeometricDelay,
    PowerDelay,
    ScriptedDelay,
    arrival_round,
)
from goldsim.engine import simulate
from goldsim.equilibrium import (
    distance_trajectory,
    regret_from_trace,
    series_diagnostics,
    solve_equilibrium,
)
from goldsim.games import (
    GameSpec,
    KellyAuction,
    anti_monotone_game,
    check_dsc,
    kelly_game,
    kelly_game_multi,
    kelly_gradient,
    kelly_payoff,
    linear_game,
    quadratic_game,
)
from goldsim.pool import FeedbackItem, RewardPool
from goldsim.spsa import (
    estimate_bias,
    perturb,
    reconstruct_gradient,
    sample_direction,
)
from goldsim.trace import RunTrace, read_trace, verify_replay, write_trace

__version__ = "0.1.0"

__all__ = [
    "KERNEL_AVAILABLE",
    "ConstantDelay",
    "DelaySchedule",
    "ExperimentConfig",
    "FeedbackItem",
    "GameSpec",
    "GeometricDelay",
    "GoldAgent",
    "GoldSchedules",
    "KellyAuction",
    "PowerDelay",
    "RewardPool",
    "RunTrace",
    "ScriptedDelay",
    "anti_monotone_game",
    "arrival_round",
    "check_dsc",
    "default_schedules",
    "default_tuning",
    "distance_trajectory",
    "estimate_bias",
    "geometry",
    "kelly_game",
    "kelly_game_multi",
    "kelly_gradient",
    "kelly_payoff",
    "linear_game",
    "load_config",
    "perturb",
    "quadratic_game",
    "read_trace",
    "reconstruct_gradient",
    "regret_from_trace",
    "run_experiment",
    "sample_direction",
    "series_diagnostics",
    "simulate",
    "solve_equilibrium",
    "validate_params",
    "verify_replay",
    "write_trace",
]
