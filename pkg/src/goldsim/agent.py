"""One player's learning policy: schedules, parameter region, round cycle.

The step size gamma_t = gamma0 / t^c and sampling radius delta_t = delta0 / t^b
are power laws whose exponents decide what the policy can guarantee against
delays growing like t^alpha:

    2c - b > 1 + alpha      (stale-information error summable)
    b + c  > 1              (estimator bias error summable)
    2c - 2b > 1             (estimator second-moment error summable)

All three strict: the error series converge and joint play converges to
equilibrium in monotone games (NASH_STRICT).  All three holding with at least
one equality: the sums grow logarithmically, enough for no-regret guarantees
(LOG_BOUNDARY).  Anything else is INVALID and rejected at config time.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from goldsim.delays import DelaySchedule
from goldsim.errors import ConfigError, InfeasibleRadiusError
from goldsim.geometry import ActionSet
from goldsim.pool import FeedbackItem, RewardPool
from goldsim.spsa import perturb, reconstruct_gradient, sample_direction

NASH_STRICT = "NASH_STRICT"
LOG_BOUNDARY = "LOG_BOUNDARY"
INVALID = "INVALID"

_EQ_TOL = 1e-12


@dataclass(frozen=True)
class ParamVerdict:
    region: str
    violated: tuple[str, ...] = ()


def validate_params(b: float, c: float, alpha: float) -> ParamVerdict:
    """Classify the exponent pair against the admissible region for alpha."""
    if b <= 0 or c <= 0:
        raise ConfigError(f"exponents must be positive, got b={b}, c={c}")
    if not 0.0 <= alpha < 1.0:
        raise ConfigError(f"alpha must be in [0, 1), got {alpha}")
    constraints = [
        ("2c - b > 1 + alpha", 2 * c - b - (1 + alpha)),
        ("b + c > 1", b + c - 1),
        ("2c - 2b > 1", 2 * c - 2 * b - 1),
    ]
    violated = tuple(name for name, slack in constraints if slack < -_EQ_TOL)
    if violated:
        return ParamVerdict(INVALID, violated)
    if all(slack > _EQ_TOL for _, slack in constraints):
        return ParamVerdict(NASH_STRICT)
    return ParamVerdict(LOG_BOUNDARY)


def default_tuning(alpha: float) -> tuple[float, float]:
    """Regret-optimal exponents: b = min(1/4, 1/3 - alpha/3), c = max(3/4, 2/3 + alpha/3)."""
    if not 0.0 <= alpha < 1.0:
        raise ConfigError(f"alpha must be in [0, 1), got {alpha}")
    return min(0.25, 1 / 3 - alpha / 3), max(0.75, 2 / 3 + alpha / 3)


@dataclass(frozen=True)
class GoldSchedules:
    """Power-law step-size and sampling-radius schedules."""

    gamma0: float
    c: float
    delta0: float
    b: float
    alpha: float = 0.0

    def __post_init__(self):
        if self.gamma0 <= 0 or self.delta0 <= 0:
            raise ConfigError("gamma0 and delta0 must be positive")
        if self.b <= 0 or self.c <= 0:
            raise ConfigError("schedule exponents b, c must be positive")
        if not 0.0 <= self.alpha < 1.0:
            raise ConfigError(f"alpha must be in [0, 1), got {self.alpha}")

    def gamma_at(self, t: int) -> float:
        # same expression as gamma_sequence so scalar and vector paths agree
        # to the last bit
        return self.gamma0 * float(t) ** (-self.c)

    def delta_at(self, t: int) -> float:
        return self.delta0 * float(t) ** (-self.b)

    def gamma_sequence(self, horizon: int) -> np.ndarray:
        t = np.arange(1, horizon + 1, dtype=np.float64)
        return self.gamma0 * t ** (-self.c)

    def delta_sequence(self, horizon: int) -> np.ndarray:
        t = np.arange(1, horizon + 1, dtype=np.float64)
        return self.delta0 * t ** (-self.b)

    def verdict(self) -> ParamVerdict:
        return validate_params(self.b, self.c, self.alpha)


def default_schedules(
    action_set: ActionSet, b: float, c: float, alpha: float = 0.0
) -> GoldSchedules:
    """Schedules with the package defaults gamma0 = diameter, delta0 = safety_radius / 2."""
    return GoldSchedules(
        gamma0=action_set.diameter(),
        c=c,
        delta0=action_set.safety_radius / 2.0,
        b=b,
        alpha=alpha,
    )


@dataclass
class StepRecord:
    """What one round produced, for the trace and for delivery routing."""

    round: int
    pivot: np.ndarray
    played: np.ndarray
    reward: float
    triggered_delay: int
    head: int  # -1 when the pool was empty
    outgoing: FeedbackItem


class GoldAgent:
    """Pivot state plus the play / enqueue / dequeue / update cycle.

    One instance per player per run; the simulation loop is the only mutator.
    """

    def __init__(
        self,
        action_set: ActionSet,
        schedules: GoldSchedules,
        x1=None,
    ):
        if schedules.delta0 > action_set.safety_radius:
            raise InfeasibleRadiusError(schedules.delta0, action_set.safety_radius)
        self.action_set = action_set
        self.schedules = schedules
        if x1 is None:
            self.pivot = np.array(action_set.safety_center, dtype=np.float64)
        else:
            self.pivot = np.asarray(x1, dtype=np.float64).copy()
            if not action_set.contains(self.pivot):
                raise ConfigError(f"x1 = {self.pivot} lies outside the action set")
        self.round = 1
        self.pool = RewardPool()

    def step(
        self,
        arriving,
        payoff,
        delay: DelaySchedule,
        rng: np.random.Generator,
    ) -> StepRecord:
        """Run one full round at the current round counter.

        ``arriving`` must contain exactly the feedback records whose origin
        plus triggered delay equals the current round (the harness routes
        them); ``payoff`` maps the played action to its reward.  The pivot is
        left unchanged on empty-pool rounds.
        """
        t = self.round
        delta_t = self.schedules.delta_at(t)
        # delta_t <= delta0 <= safety radius by construction; a violation
        # means the configuration was mutated after validation
        assert delta_t <= self.action_set.safety_radius

        direction = sample_direction(self.action_set.dim, rng)
        pivot_before = self.pivot.copy()
        played, _ = perturb(self.pivot, self.action_set, delta_t, direction)
        reward = float(payoff(played))
        d_t = delay.delay_at(t, rng)
        outgoing = FeedbackItem(
            origin=t, reward=reward, direction=direction, radius=delta_t
        )

        self.pool.enqueue_batch(arriving)
        head_item = self.pool.dequeue_head(t)
        if head_item is not None:
            grad = reconstruct_gradient(head_item, self.action_set.dim)
            self.pivot = self.action_set.project(
                self.pivot + self.schedules.gamma_at(t) * grad
            )
        self.round = t + 1
        return StepRecord(
            round=t,
            pivot=pivot_before,
            played=played,
            reward=reward,
            triggered_delay=d_t,
            head=head_item.origin if head_item is not None else -1,
            outgoing=outgoing,
        )
