"""Delay schedules: how many rounds a reward generated at round t is deferred.

Four kinds are provided.  ``constant`` and ``power`` are deterministic,
``geometric`` draws long-tailed random delays clamped pathwise to floor(t^alpha)
so the certified growth exponent holds on every sample path, and ``scripted``
replays an explicit integer sequence (adversarial injection).  Every schedule
carries the exponent ``alpha`` in [0, 1) that it certifies: emitted delays obey
d_t = O(t^alpha).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from goldsim.errors import ConfigError, ScheduleExhaustedError


def arrival_round(t: int, d: int) -> int:
    """Round at which the reward generated at round t (delay d) is received."""
    if t < 1 or d < 0:
        raise ValueError(f"need t >= 1 and d >= 0, got t={t}, d={d}")
    return t + d


class DelaySchedule:
    """Base class; subclasses emit the nonnegative integer sequence d_t.

    Every subclass carries ``alpha``, the growth exponent in [0, 1) that the
    schedule certifies (emitted delays are O(t^alpha)).
    """

    alpha: float

    def _check_alpha(self):
        if not 0.0 <= self.alpha < 1.0:
            raise ConfigError(f"delay exponent alpha must be in [0, 1), got {self.alpha}")

    def delay_at(self, t: int, rng: np.random.Generator | None = None) -> int:
        raise NotImplementedError

    def sequence(self, horizon: int, rng: np.random.Generator | None = None) -> np.ndarray:
        """Delays for t = 1..horizon as an int64 array."""
        return np.array(
            [self.delay_at(t, rng) for t in range(1, horizon + 1)], dtype=np.int64
        )

    @property
    def is_random(self) -> bool:
        return False


@dataclass(frozen=True)
class ConstantDelay(DelaySchedule):
    """d_t = value for every round."""

    value: int = 0
    alpha: float = 0.0

    def __post_init__(self):
        self._check_alpha()
        if self.value < 0:
            raise ConfigError(f"constant delay must be >= 0, got {self.value}")

    def delay_at(self, t: int, rng=None) -> int:
        return self.value

    def sequence(self, horizon: int, rng=None) -> np.ndarray:
        return np.full(horizon, self.value, dtype=np.int64)


@dataclass(frozen=True)
class PowerDelay(DelaySchedule):
    """d_t = floor(scale * t^alpha); satisfies d_t / t^alpha <= scale + 1."""

    scale: float = 1.0
    alpha: float = 0.0

    def __post_init__(self):
        self._check_alpha()
        if self.scale < 0:
            raise ConfigError(f"power delay scale must be >= 0, got {self.scale}")

    def delay_at(self, t: int, rng=None) -> int:
        return int(math.floor(self.scale * t**self.alpha))

    def sequence(self, horizon: int, rng=None) -> np.ndarray:
        t = np.arange(1, horizon + 1, dtype=np.float64)
        return np.floor(self.scale * t**self.alpha).astype(np.int64)


@dataclass(frozen=True)
class GeometricDelay(DelaySchedule):
    """Geometric delays on {0, 1, ...} with the given mean, capped at floor(t^alpha).

    The cap keeps the certified exponent honest on every path; without it a
    long-tailed draw could exceed any polynomial envelope.
    """

    mean: float = 1.0
    alpha: float = 0.5

    def __post_init__(self):
        self._check_alpha()
        if self.mean <= 0:
            raise ConfigError(f"geometric delay mean must be > 0, got {self.mean}")

    @property
    def is_random(self) -> bool:
        return True

    def delay_at(self, t: int, rng: np.random.Generator | None = None) -> int:
        if rng is None:
            raise ValueError("geometric delay schedule requires an rng")
        # numpy's geometric is supported on {1, 2, ...} with mean 1/p
        raw = int(rng.geometric(1.0 / (1.0 + self.mean))) - 1
        return min(raw, int(math.floor(t**self.alpha)))


@dataclass(frozen=True)
class ScriptedDelay(DelaySchedule):
    """Replays an explicit delay sequence; errors when exhausted."""

    values: tuple[int, ...] = field(default=())
    alpha: float = 0.0

    def __post_init__(self):
        self._check_alpha()
        if any(v < 0 for v in self.values):
            raise ConfigError("scripted delays must be nonnegative integers")

    def delay_at(self, t: int, rng=None) -> int:
        if t < 1 or t > len(self.values):
            raise ScheduleExhaustedError(t, len(self.values))
        return int(self.values[t - 1])

    def sequence(self, horizon: int, rng=None) -> np.ndarray:
        if horizon > len(self.values):
            raise ScheduleExhaustedError(horizon, len(self.values))
        return np.array(self.values[:horizon], dtype=np.int64)


def scripted_from_file(path, alpha: float = 0.0) -> ScriptedDelay:
    """Load a scripted schedule from a text file, one integer per line."""
    values = []
    with open(path) as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                values.append(int(line))
            except ValueError as exc:
                raise ConfigError(f"{path}:{lineno}: not an integer: {line!r}") from exc
    return ScriptedDelay(values=tuple(values), alpha=alpha)
