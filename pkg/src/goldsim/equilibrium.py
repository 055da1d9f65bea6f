"""Full-information oracles and post-hoc metrics.

Nothing here touches the learning policy: these are independent reference
computations used to judge runs.  The equilibrium oracle is an extragradient
iteration on the true gradient field (convergent for monotone games); the
regret comparator is found by projected gradient ascent on the realized
opponent sequence, cross-checked against a grid search in low dimension so a
solver bug cannot silently corrupt headline numbers.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from goldsim.agent import GoldSchedules
from goldsim.games import GameSpec, Profile, check_dsc
from goldsim.trace import RunTrace


@dataclass(frozen=True)
class EquilibriumResult:
    point: Profile
    residual: float
    iterations: int
    converged: bool


def _natural_residual(game: GameSpec, x: list[np.ndarray]) -> float:
    res = 0.0
    profile = tuple(x)
    for i, aset in enumerate(game.action_sets):
        step_pt = aset.project(x[i] + game.gradient(i, profile))
        res = max(res, float(np.linalg.norm(x[i] - step_pt)))
    return res


def solve_equilibrium(
    game: GameSpec,
    tol: float = 1e-8,
    max_iter: int = 100_000,
    x0: Profile | None = None,
    step: float | None = None,
    precheck_pairs: int = 0,
    rng: np.random.Generator | None = None,
) -> EquilibriumResult:
    """Extragradient iteration to the game's variational fixed point.

    The default step 1/(2*beta) is the standard convergent regime for
    monotone operators with beta-Lipschitz gradients.  On failure the best
    iterate is returned flagged NOT converged, never silently.
    ``precheck_pairs > 0`` runs the monotonicity falsifier first and warns
    (does not fail) when violations are found.
    """
    if precheck_pairs > 0:
        report = check_dsc(game, pairs=precheck_pairs, rng=rng or np.random.default_rng(0))
        if report.violations:
            warnings.warn(
                f"game {game.name!r} failed the monotonicity precheck on "
                f"{report.violations}/{report.pairs} sampled pairs; "
                "the equilibrium iteration may not converge",
                stacklevel=2,
            )
    if step is None:
        step = 1.0 / (2.0 * game.lipschitz_grad) if game.lipschitz_grad > 0 else 1.0

    if x0 is None:
        x = [np.array(s.safety_center, dtype=np.float64) for s in game.action_sets]
    else:
        x = [np.asarray(v, dtype=np.float64).copy() for v in x0]

    best = [v.copy() for v in x]
    best_res = _natural_residual(game, x)
    iterations = 0
    for iterations in range(1, max_iter + 1):
        profile = tuple(x)
        half = [
            s.project(x[i] + step * game.gradient(i, profile))
            for i, s in enumerate(game.action_sets)
        ]
        half_profile = tuple(half)
        x = [
            s.project(x[i] + step * game.gradient(i, half_profile))
            for i, s in enumerate(game.action_sets)
        ]
        res = _natural_residual(game, x)
        if res < best_res:
            best_res = res
            best = [v.copy() for v in x]
        if res <= tol:
            return EquilibriumResult(tuple(x), res, iterations, True)
    return EquilibriumResult(tuple(best), best_res, iterations, False)


# ---------------------------------------------------------------------------
# Regret
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class RegretReport:
    horizon: int
    best_fixed: np.ndarray
    cumulative: float
    per_round: np.ndarray


def _mean_payoff_fn(game: GameSpec, player: int, opp_mats: list[np.ndarray | None]):
    """mean_t u_player(x ; opp_t) as a function of a batch of candidate x."""
    horizon = next(m for m in opp_mats if m is not None).shape[0]

    def evaluate(xs: np.ndarray, chunk: int = 16) -> np.ndarray:
        out = np.empty(xs.shape[0])
        for start in range(0, xs.shape[0], chunk):
            block = xs[start : start + chunk]
            g = block.shape[0]
            mats = []
            for j, m in enumerate(opp_mats):
                if j == player:
                    mats.append(np.repeat(block, horizon, axis=0))
                else:
                    mats.append(np.tile(m, (g, 1)))
            pay = game.eval_payoff_batch(player, mats)
            out[start : start + g] = pay.reshape(g, horizon).mean(axis=1)
        return out

    return evaluate


def _mean_gradient(game: GameSpec, player: int, opp_mats, x: np.ndarray) -> np.ndarray:
    horizon = next(m for m in opp_mats if m is not None).shape[0]
    mats = [
        np.broadcast_to(x, (horizon, x.size)) if j == player else m
        for j, m in enumerate(opp_mats)
    ]
    return game.eval_gradient_batch(player, mats).mean(axis=0)


def best_fixed_action(
    game: GameSpec,
    player: int,
    opp_mats: list[np.ndarray | None],
    tol: float = 1e-8,
    max_iter: int = 50_000,
    grid_check: bool = True,
) -> np.ndarray:
    """Maximizer of the cumulative payoff against a fixed opponent sequence.

    Projected gradient ascent on the (concave) mean payoff, then, for one- and
    two-dimensional players, a grid search at 1e-3 resolution; the better of
    the two wins, which guards the ascent against stepping bugs.
    """
    aset = game.action_sets[player]
    beta = game.lipschitz_grad
    step = 1.0 / beta if beta > 0 else aset.diameter() / max(game.lipschitz_value, 1.0)
    x = np.array(aset.safety_center, dtype=np.float64)
    for _ in range(max_iter):
        x_next = aset.project(x + step * _mean_gradient(game, player, opp_mats, x))
        if np.linalg.norm(x_next - x) <= tol:
            x = x_next
            break
        x = x_next

    if grid_check and aset.dim <= 2:
        evaluate = _mean_payoff_fn(game, player, opp_mats)
        cand = _grid_best(aset, evaluate, resolution=1e-3)
        if evaluate(cand[None, :])[0] > evaluate(x[None, :])[0]:
            x = cand
    return x


def _grid_best(aset, evaluate, resolution: float) -> np.ndarray:
    """Coordinate grid refinement down to the requested resolution."""
    from goldsim.geometry import Box

    if isinstance(aset, Box):
        lo, hi = aset.lo.copy(), aset.hi.copy()
    else:
        # bounding box of the set; grid points are projected back inside
        c, r = aset.safety_center, aset.diameter()
        lo, hi = c - r, c + r
    pts_per_axis = 33 if aset.dim == 2 else 1001
    while True:
        axes = [np.linspace(lo[k], hi[k], pts_per_axis) for k in range(aset.dim)]
        mesh = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1).reshape(-1, aset.dim)
        mesh = np.stack([aset.project(p) for p in mesh]) if not isinstance(aset, Box) else mesh
        vals = evaluate(mesh)
        best = mesh[int(np.argmax(vals))]
        width = float((hi - lo).max()) / (pts_per_axis - 1)
        if width <= resolution:
            return best
        span = 2 * width
        lo = np.maximum(lo, best - span)
        hi = np.minimum(hi, best + span)


def regret_from_trace(
    trace: RunTrace,
    game: GameSpec,
    player: int = 0,
    solver_tol: float = 1e-8,
    grid_check: bool = True,
) -> RegretReport:
    """Realized regret of one player against the best fixed action in hindsight.

    The comparator maximizes the cumulative payoff with opponents frozen to
    their *played* sequence; per-round regret subtracts the realized rewards
    recorded in the trace.
    """
    if not trace.is_full:
        raise ValueError("regret computation requires a full trace")
    # the focal player's slot is overwritten with the candidate action by the
    # evaluators; keeping the played matrix there fixes the horizon
    opp_mats = list(trace.played)
    best = best_fixed_action(
        game, player, opp_mats, tol=solver_tol, grid_check=grid_check
    )
    mats = [
        np.broadcast_to(best, (trace.horizon, best.size)) if j == player else m
        for j, m in enumerate(opp_mats)
    ]
    comparator_payoffs = game.eval_payoff_batch(player, mats)
    per_round = comparator_payoffs - trace.rewards[player]
    return RegretReport(
        horizon=trace.horizon,
        best_fixed=best,
        cumulative=float(per_round.sum()),
        per_round=per_round,
    )


# ---------------------------------------------------------------------------
# Distance to equilibrium and error-series diagnostics
# ---------------------------------------------------------------------------


def distance_trajectory(trace: RunTrace, eq: EquilibriumResult) -> dict[str, np.ndarray]:
    """Joint-profile distances to the equilibrium, per recorded round.

    Returns the distance of the played profile and of the pivot profile.
    """
    played_sq = np.zeros(trace.rounds.size)
    pivot_sq = np.zeros(trace.rounds.size)
    for i in range(trace.players):
        target = np.asarray(eq.point[i])
        played_sq += ((trace.played[i] - target) ** 2).sum(axis=1)
        pivot_sq += ((trace.pivots[i] - target) ** 2).sum(axis=1)
    return {"played": np.sqrt(played_sq), "pivot": np.sqrt(pivot_sq)}


def series_diagnostics(
    trace: RunTrace, schedules: GoldSchedules, player: int = 0
) -> dict[str, np.ndarray]:
    """Running partial sums of the three error series driven by the run's heads.

    A_t couples the step size with the backlog of steps between the dequeued
    origin and now (staleness), B_t with the sampling radius at the origin
    (estimator bias), and C_t with its inverse square (estimator second
    moment).  Empty-pool rounds contribute zero to all three.
    """
    if not trace.is_full:
        raise ValueError("series diagnostics require a full trace")
    horizon = trace.horizon
    gamma = schedules.gamma_sequence(horizon)
    delta = schedules.delta_sequence(horizon)
    heads = trace.heads[player]
    ratio_prefix = np.concatenate([[0.0], np.cumsum(gamma / delta)])

    a_terms = np.zeros(horizon)
    b_terms = np.zeros(horizon)
    c_terms = np.zeros(horizon)
    has_head = heads >= 1
    idx = np.nonzero(has_head)[0]
    s = heads[idx]
    t = idx + 1
    # inner sum over rounds s..t-1 of gamma/delta via prefix differences
    a_terms[idx] = gamma[idx] * (ratio_prefix[t - 1] - ratio_prefix[s - 1])
    b_terms[idx] = gamma[idx] * delta[s - 1]
    c_terms[idx] = gamma[idx] ** 2 / delta[s - 1] ** 2
    return {
        "A_partial": np.cumsum(a_terms),
        "B_partial": np.cumsum(b_terms),
        "C_partial": np.cumsum(c_terms),
    }
