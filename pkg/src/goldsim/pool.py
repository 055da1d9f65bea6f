"""FIFO-by-origin reward pooling.

Rewards arrive in batches (possibly out of order, possibly not at all in a
given round) and are consumed one per round, oldest origin first.  The pool
stores the full feedback record (reward, retained sampling direction, and the
sampling radius in force when the action was played) because the gradient
reconstruction needs all three.  An empty pool is a first-class outcome
(``dequeue_head`` returns None): the policy simply skips its update that round.

Exact structural facts tracked here and verified in the test suite:
  * rounds with an empty pool never exceed the maximal delay seen so far,
  * the age of a dequeued reward never exceeds the maximal delay seen so far,
  * the number of pending (received or in-flight) records never exceeds the
    maximal delay, which bounds the direction memory the policy must keep.
"""

from __future__ import annotations

import heapq
from dataclasses import dataclass

import numpy as np

from goldsim.errors import DuplicateOriginError

_NORM_TOL = 1e-12


@dataclass(frozen=True)
class FeedbackItem:
    """A timestamped reward plus the sampling data retained from its origin round."""

    origin: int
    reward: float
    direction: np.ndarray
    radius: float

    def __post_init__(self):
        if self.origin < 1:
            raise ValueError(f"origin must be >= 1, got {self.origin}")
        if self.radius <= 0:
            raise ValueError(f"sampling radius must be > 0, got {self.radius}")
        norm = float(np.linalg.norm(self.direction))
        if abs(norm - 1.0) > _NORM_TOL:
            raise ValueError(f"direction must be unit norm, got ||u|| = {norm}")

    def __lt__(self, other: "FeedbackItem") -> bool:
        return self.origin < other.origin


@dataclass
class PoolStats:
    empty_rounds: int = 0
    max_lag: int = 0
    max_pool_size: int = 0

    def as_dict(self) -> dict[str, int]:
        return {
            "empty_rounds": self.empty_rounds,
            "max_lag": self.max_lag,
            "max_pool_size": self.max_pool_size,
        }


class RewardPool:
    """Min-heap of feedback records keyed by origin round.

    One pool per agent per run; mutation is single-threaded within a run.
    """

    def __init__(self):
        self._heap: list[FeedbackItem] = []
        self._origins: set[int] = set()
        self._consumed: set[int] = set()
        self.last_head: int | float = float("inf")
        self.stats = PoolStats()

    def __len__(self) -> int:
        return len(self._heap)

    def enqueue_batch(self, items) -> None:
        """Add a batch of received records; origins must never repeat."""
        for item in items:
            if item.origin in self._origins or item.origin in self._consumed:
                raise DuplicateOriginError(item.origin)
            heapq.heappush(self._heap, item)
            self._origins.add(item.origin)

    def dequeue_head(self, t: int) -> FeedbackItem | None:
        """Remove and return the oldest record, or None when the pool is empty.

        ``t`` is the current round; it feeds the lag statistic and the
        convention that an empty pool records head = infinity.
        """
        if not self._heap:
            self.stats.empty_rounds += 1
            self.last_head = float("inf")
            return None
        item = heapq.heappop(self._heap)
        self._origins.discard(item.origin)
        self._consumed.add(item.origin)
        self.last_head = item.origin
        lag = t - item.origin
        if lag > self.stats.max_lag:
            self.stats.max_lag = lag
        # pool size is measured after the round's dequeue: that is the
        # pending-memory quantity the max-delay bound controls
        if len(self._heap) > self.stats.max_pool_size:
            self.stats.max_pool_size = len(self._heap)
        return item

    def pool_stats(self) -> dict[str, int]:
        return self.stats.as_dict()

    def pending_origins(self) -> list[int]:
        return sorted(self._origins)


def head_sequence(delays) -> dict[str, np.ndarray]:
    """Pool dynamics induced by a delay sequence alone.

    The head (dequeued origin) of each round depends only on arrival times,
    not on reward values, so the whole head/pool-size/empty-count evolution can
    be derived from ``delays`` (d_t for t = 1..T).  Returns int64 arrays
    ``heads`` (-1 when the pool was empty), ``pool_sizes`` (pool size after the
    round's enqueue and dequeue), and ``empty_counts`` (cumulative count of
    empty rounds), each of length T.
    """
    delays = np.asarray(delays, dtype=np.int64)
    horizon = delays.size
    buckets: list[list[int]] = [[] for _ in range(horizon + 1)]
    for s in range(1, horizon + 1):
        arrive = s + int(delays[s - 1])
        if arrive <= horizon:
            buckets[arrive].append(s)
    heads = np.empty(horizon, dtype=np.int64)
    pool_sizes = np.empty(horizon, dtype=np.int64)
    empty_counts = np.empty(horizon, dtype=np.int64)
    heap: list[int] = []
    empties = 0
    for t in range(1, horizon + 1):
        for s in buckets[t]:
            heapq.heappush(heap, s)
        if heap:
            heads[t - 1] = heapq.heappop(heap)
        else:
            heads[t - 1] = -1
            empties += 1
        pool_sizes[t - 1] = len(heap)
        empty_counts[t - 1] = empties
    return {"heads": heads, "pool_sizes": pool_sizes, "empty_counts": empty_counts}
