"""Game definitions: payoffs, exact gradients, regularity constants.

A profile is a tuple of per-player action vectors.  Payoff and gradient
callables take ``(player_index, profile)``; the optional batch variants take a
list of ``(S, dim_j)`` matrices (one per player) and evaluate S profiles at
once, which the equilibrium/regret solvers and the bias diagnostics rely on
for speed.

Shipped games:
  * ``kelly_game``     : proportional-share auction with entry barrier
                          (monotone; unique equilibrium),
  * ``quadratic_game`` : decoupled concave quadratics (strongly monotone),
  * ``linear_game``    : decoupled linear payoffs (exact zero-bias fixture),
  * ``anti_monotone_game``: sign-flipped quadratic, a negative control for
                          the monotonicity checker.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Any, Callable, Sequence

import numpy as np

from goldsim.errors import ConfigError
from goldsim.geometry import ActionSet, make_box, make_interval

Profile = tuple[np.ndarray, ...]


@dataclass(frozen=True)
class KernelGame:
    """Closed-form description consumed by the compiled engine.

    Only one-dimensional players are supported on the fast path; ``coeffs``
    holds the per-player target (quadratic), gain (kelly) or slope (linear).
    """

    kind: str  # "quadratic" | "kelly" | "linear"
    coeffs: np.ndarray
    entry_barrier: float = 0.0


@dataclass(frozen=True)
class GameSpec:
    name: str
    players: int
    action_sets: tuple[ActionSet, ...]
    payoff: Callable[[int, Profile], float]
    gradient: Callable[[int, Profile], np.ndarray]
    lipschitz_value: float
    lipschitz_grad: float
    payoff_batch: Callable[[int, list[np.ndarray]], np.ndarray] | None = None
    gradient_batch: Callable[[int, list[np.ndarray]], np.ndarray] | None = None
    kernel: KernelGame | None = None
    aux: Any = field(default=None, repr=False)

    @property
    def dims(self) -> tuple[int, ...]:
        return tuple(s.dim for s in self.action_sets)

    def payoffs_at(self, profile: Profile) -> np.ndarray:
        return np.array([self.payoff(i, profile) for i in range(self.players)])

    def eval_payoff_batch(self, player: int, mats: list[np.ndarray]) -> np.ndarray:
        if self.payoff_batch is not None:
            return self.payoff_batch(player, mats)
        n = mats[0].shape[0]
        return np.array(
            [self.payoff(player, tuple(m[k] for m in mats)) for k in range(n)]
        )

    def eval_gradient_batch(self, player: int, mats: list[np.ndarray]) -> np.ndarray:
        if self.gradient_batch is not None:
            return self.gradient_batch(player, mats)
        n = mats[0].shape[0]
        return np.stack(
            [self.gradient(player, tuple(m[k] for m in mats)) for k in range(n)]
        )


# ---------------------------------------------------------------------------
# Kelly auction
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class KellyAuction:
    """Proportional-share auction: player i receives the fraction
    x_i / (entry_barrier + sum_j x_j) of the commodity, valued at gains[i],
    and pays their own bid."""

    gains: np.ndarray
    entry_barrier: float
    budgets: np.ndarray

    def __post_init__(self):
        if self.entry_barrier <= 0:
            raise ConfigError(
                "kelly auction requires entry_barrier > 0 "
                "(the zero-bid profile is undefined at c = 0)"
            )
        if np.any(self.gains <= 0) or np.any(self.budgets <= 0):
            raise ConfigError("kelly gains and budgets must be positive")

    @property
    def players(self) -> int:
        return int(self.gains.size)


def kelly_payoff(a: KellyAuction, i: int, bids: Sequence[float]) -> float:
    """g_i * x_i / (c + sum_j x_j) - x_i."""
    total = a.entry_barrier
    for b in bids:
        total += float(b)
    x_i = float(bids[i])
    return float(a.gains[i]) * (x_i / total) - x_i


def kelly_gradient(a: KellyAuction, i: int, bids: Sequence[float]) -> float:
    """d/dx_i of the Kelly payoff: g_i * (c + sum_{j != i} x_j) / (c + sum x)^2 - 1."""
    total = a.entry_barrier
    for b in bids:
        total += float(b)
    others = total - float(bids[i])
    return float(a.gains[i]) * others / (total * total) - 1.0


def kelly_game(
    gains: Sequence[float],
    entry_barrier: float,
    budgets: Sequence[float],
    safety_shrink: float = 0.99,
) -> GameSpec:
    """Kelly auction as a GameSpec; each bidder's space is [0, budget_i].

    The safety ball is the interval's inscribed ball shrunk by
    ``safety_shrink`` so sampled bids stay strictly inside [0, budget].
    Regularity constants are analytic upper bounds on [0, b] with c > 0.
    """
    auction = KellyAuction(
        gains=np.asarray(gains, dtype=np.float64),
        entry_barrier=float(entry_barrier),
        budgets=np.asarray(budgets, dtype=np.float64),
    )
    n = auction.players
    sets = tuple(
        make_interval(
            0.0,
            float(b),
            safety_center=[float(b) / 2.0],
            safety_radius=float(b) / 2.0 * safety_shrink,
        )
        for b in auction.budgets
    )

    def payoff(i: int, profile: Profile) -> float:
        return kelly_payoff(auction, i, [float(x[0]) for x in profile])

    def gradient(i: int, profile: Profile) -> np.ndarray:
        return np.array([kelly_gradient(auction, i, [float(x[0]) for x in profile])])

    def payoff_batch(i: int, mats: list[np.ndarray]) -> np.ndarray:
        total = np.full(mats[0].shape[0], auction.entry_barrier)
        for m in mats:
            total = total + m[:, 0]
        x_i = mats[i][:, 0]
        return auction.gains[i] * (x_i / total) - x_i

    def gradient_batch(i: int, mats: list[np.ndarray]) -> np.ndarray:
        total = np.full(mats[0].shape[0], auction.entry_barrier)
        for m in mats:
            total = total + m[:, 0]
        others = total - mats[i][:, 0]
        return (auction.gains[i] * others / (total * total) - 1.0)[:, None]

    c = auction.entry_barrier
    g_max = float(auction.gains.max())
    lipschitz_value = max(1.0, g_max / c - 1.0)
    lipschitz_grad = 2.0 * n * g_max / (c * c)
    return GameSpec(
        name="kelly",
        players=n,
        action_sets=sets,
        payoff=payoff,
        gradient=gradient,
        lipschitz_value=lipschitz_value,
        lipschitz_grad=lipschitz_grad,
        payoff_batch=payoff_batch,
        gradient_batch=gradient_batch,
        kernel=KernelGame("kelly", auction.gains.copy(), c),
        aux=auction,
    )


def kelly_game_multi(
    gains,
    entry_barriers,
    budgets,
    safety_shrink: float = 0.99,
) -> GameSpec:
    """Multi-resource Kelly auction: one proportional-share contest per resource.

    ``gains`` and ``budgets`` are (players, resources) arrays,
    ``entry_barriers`` has one positive entry per resource.  Each bidder's
    action space is the product of intervals [0, budget_ir]; payoffs and
    gradients sum the single-resource forms over resources.  Runs on the
    pure-Python engine (players are multi-dimensional).
    """
    gains = np.asarray(gains, dtype=np.float64)
    budgets = np.asarray(budgets, dtype=np.float64)
    barriers = np.asarray(entry_barriers, dtype=np.float64)
    if gains.ndim != 2 or gains.shape != budgets.shape:
        raise ConfigError("gains and budgets must be (players, resources) arrays")
    n, resources = gains.shape
    if barriers.shape != (resources,):
        raise ConfigError("need one entry barrier per resource")
    if np.any(barriers <= 0):
        raise ConfigError("entry barriers must be positive")
    if np.any(gains <= 0) or np.any(budgets <= 0):
        raise ConfigError("gains and budgets must be positive")

    sets = tuple(
        make_box(
            np.zeros(resources),
            budgets[i],
            safety_center=budgets[i] / 2.0,
            safety_radius=float(budgets[i].min()) / 2.0 * safety_shrink,
        )
        for i in range(n)
    )

    def payoff(i: int, profile: Profile) -> float:
        total = barriers.copy()
        for x in profile:
            total = total + x
        return float((gains[i] * (profile[i] / total) - profile[i]).sum())

    def gradient(i: int, profile: Profile) -> np.ndarray:
        total = barriers.copy()
        for x in profile:
            total = total + x
        others = total - profile[i]
        return gains[i] * others / (total * total) - 1.0

    def payoff_batch(i: int, mats: list[np.ndarray]) -> np.ndarray:
        total = np.broadcast_to(barriers, mats[0].shape).copy()
        for m in mats:
            total = total + m
        return (gains[i] * (mats[i] / total) - mats[i]).sum(axis=1)

    def gradient_batch(i: int, mats: list[np.ndarray]) -> np.ndarray:
        total = np.broadcast_to(barriers, mats[0].shape).copy()
        for m in mats:
            total = total + m
        others = total - mats[i]
        return gains[i] * others / (total * total) - 1.0

    c_min = float(barriers.min())
    g_max = float(gains.max())
    return GameSpec(
        name="kelly_multi",
        players=n,
        action_sets=sets,
        payoff=payoff,
        gradient=gradient,
        lipschitz_value=np.sqrt(resources) * max(1.0, g_max / c_min - 1.0),
        lipschitz_grad=2.0 * n * g_max / (c_min * c_min),
        payoff_batch=payoff_batch,
        gradient_batch=gradient_batch,
        aux={"gains": gains, "entry_barriers": barriers, "budgets": budgets},
    )


# ---------------------------------------------------------------------------
# Decoupled quadratic / linear games
# ---------------------------------------------------------------------------


def quadratic_game(targets: Sequence[Sequence[float]], sets: Sequence[ActionSet]) -> GameSpec:
    """Decoupled game u_i(x) = -||x_i - target_i||^2 over the given sets."""
    targets = tuple(np.atleast_1d(np.asarray(a, dtype=np.float64)) for a in targets)
    sets = tuple(sets)
    if len(targets) != len(sets):
        raise ConfigError("one target per action set required")
    for a, s in zip(targets, sets):
        if a.size != s.dim:
            raise ConfigError(f"target dim {a.size} != set dim {s.dim}")

    def payoff(i: int, profile: Profile) -> float:
        diff = profile[i] - targets[i]
        return float(-(diff @ diff))

    def gradient(i: int, profile: Profile) -> np.ndarray:
        return -2.0 * (profile[i] - targets[i])

    def payoff_batch(i: int, mats: list[np.ndarray]) -> np.ndarray:
        diff = mats[i] - targets[i]
        return -np.einsum("sk,sk->s", diff, diff)

    def gradient_batch(i: int, mats: list[np.ndarray]) -> np.ndarray:
        return -2.0 * (mats[i] - targets[i])

    reach = 0.0
    for a, s in zip(targets, sets):
        far = s.diameter() + float(np.linalg.norm(a - s.project(a)))
        reach = max(reach, far)
    kernel = None
    if all(s.dim == 1 for s in sets):
        kernel = KernelGame("quadratic", np.array([a[0] for a in targets]))
    return GameSpec(
        name="quadratic",
        players=len(sets),
        action_sets=sets,
        payoff=payoff,
        gradient=gradient,
        lipschitz_value=2.0 * reach,
        lipschitz_grad=2.0,
        payoff_batch=payoff_batch,
        gradient_batch=gradient_batch,
        kernel=kernel,
        aux=targets,
    )


def linear_game(slopes: Sequence[Sequence[float]], sets: Sequence[ActionSet]) -> GameSpec:
    """Decoupled game u_i(x) = <slope_i, x_i>; gradient is constant."""
    slopes = tuple(np.atleast_1d(np.asarray(a, dtype=np.float64)) for a in slopes)
    sets = tuple(sets)

    def payoff(i: int, profile: Profile) -> float:
        return float(slopes[i] @ profile[i])

    def gradient(i: int, profile: Profile) -> np.ndarray:
        return slopes[i].copy()

    def payoff_batch(i: int, mats: list[np.ndarray]) -> np.ndarray:
        return mats[i] @ slopes[i]

    def gradient_batch(i: int, mats: list[np.ndarray]) -> np.ndarray:
        return np.tile(slopes[i], (mats[i].shape[0], 1))

    kernel = None
    if all(s.dim == 1 for s in sets):
        kernel = KernelGame("linear", np.array([a[0] for a in slopes]))
    return GameSpec(
        name="linear",
        players=len(sets),
        action_sets=sets,
        payoff=payoff,
        gradient=gradient,
        lipschitz_value=max(float(np.linalg.norm(a)) for a in slopes),
        lipschitz_grad=0.0,
        payoff_batch=payoff_batch,
        gradient_batch=gradient_batch,
        kernel=kernel,
        aux=slopes,
    )


def anti_monotone_game(players: int = 2) -> GameSpec:
    """u_i(x) = +x_i^2 on [0, 1]: every profile pair violates monotonicity.

    Negative control for check_dsc; the payoff is convex (not concave) in the
    player's own action, so this game is not a valid learning environment.
    """
    sets = tuple(make_interval(0.0, 1.0) for _ in range(players))

    def payoff(i: int, profile: Profile) -> float:
        return float(profile[i][0] ** 2)

    def gradient(i: int, profile: Profile) -> np.ndarray:
        return 2.0 * profile[i]

    def gradient_batch(i: int, mats: list[np.ndarray]) -> np.ndarray:
        return 2.0 * mats[i]

    return GameSpec(
        name="anti_monotone",
        players=players,
        action_sets=sets,
        payoff=payoff,
        gradient=gradient,
        lipschitz_value=2.0,
        lipschitz_grad=2.0,
        gradient_batch=gradient_batch,
    )


# ---------------------------------------------------------------------------
# Diagonal strict concavity checker
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class DscReport:
    violations: int
    worst_value: float
    pairs: int


def check_dsc(
    game: GameSpec,
    weights: Sequence[float] | None = None,
    pairs: int = 10_000,
    rng: np.random.Generator | None = None,
    min_separation: float = 1e-6,
) -> DscReport:
    """Sampling falsifier for weighted monotonicity of the gradient field.

    Draws ``pairs`` random feasible profile pairs (x, x') with
    ||x' - x|| > min_separation and evaluates
    sum_i w_i * <v_i(x') - v_i(x), x'_i - x_i>.  A nonnegative value is a
    violation.  This certifies only "no violation found", never a proof.
    """
    rng = np.random.default_rng() if rng is None else rng
    w = np.ones(game.players) if weights is None else np.asarray(weights, dtype=float)
    if np.any(w <= 0):
        raise ConfigError("dsc weights must be positive")

    xs = [s.sample(rng, size=pairs) for s in game.action_sets]
    ys = [s.sample(rng, size=pairs) for s in game.action_sets]
    gap = np.sqrt(
        sum(((a - b) ** 2).sum(axis=1) for a, b in zip(xs, ys))
    )
    for _ in range(100):
        close = gap <= min_separation
        if not close.any():
            break
        k = int(close.sum())
        for j, s in enumerate(game.action_sets):
            ys[j][close] = s.sample(rng, size=k)
        gap = np.sqrt(sum(((a - b) ** 2).sum(axis=1) for a, b in zip(xs, ys)))

    total = np.zeros(pairs)
    for i in range(game.players):
        gx = game.eval_gradient_batch(i, xs)
        gy = game.eval_gradient_batch(i, ys)
        total += w[i] * np.einsum("sk,sk->s", gy - gx, ys[i] - xs[i])
    return DscReport(
        violations=int((total >= 0.0).sum()),
        worst_value=float(total.max()),
        pairs=pairs,
    )


def finite_difference_gradient(
    game: GameSpec, i: int, profile: Profile, step: float = 1e-6
) -> np.ndarray:
    """Central finite differences of the payoff in the player's own action."""
    x = profile[i]
    out = np.empty_like(x)
    for k in range(x.size):
        hi = [v.copy() for v in profile]
        lo = [v.copy() for v in profile]
        hi[i][k] += step
        lo[i][k] -= step
        out[k] = (game.payoff(i, tuple(hi)) - game.payoff(i, tuple(lo))) / (2 * step)
    return out
