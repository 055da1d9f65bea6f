"""Exception types shared across the package."""

from __future__ import annotations


class GoldSimError(Exception):
    """Base class for all library errors."""


class DimensionMismatchError(GoldSimError):
    """A vector argument has the wrong length for its action space."""


class DegenerateSetError(GoldSimError):
    """An action set has empty interior or an invalid safety ball."""


class ScheduleExhaustedError(GoldSimError):
    """A scripted delay schedule has no entry for the requested round."""

    def __init__(self, t: int, length: int):
        self.t = t
        self.length = length
        super().__init__(f"scripted delay schedule exhausted at t={t} (length {length})")


class DuplicateOriginError(GoldSimError):
    """A reward with an already-enqueued origin was enqueued again."""

    def __init__(self, origin: int):
        self.origin = origin
        super().__init__(f"duplicate reward origin {origin} (harness bug)")


class InfeasibleRadiusError(GoldSimError):
    """A sampling radius exceeds the safety radius of the action set."""

    def __init__(self, radius: float, safety_radius: float):
        self.radius = radius
        self.safety_radius = safety_radius
        super().__init__(
            f"infeasible sampling radius {radius} > safety radius {safety_radius}"
        )


class ConfigError(GoldSimError):
    """An experiment configuration failed validation."""


class SimulationError(GoldSimError):
    """A module error surfaced mid-run, annotated with the failing round."""

    def __init__(self, round_: int, cause: Exception):
        self.round = round_
        super().__init__(f"round {round_}: {cause}")
