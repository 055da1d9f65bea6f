from __future__ import annotations

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from goldsim.errors import DuplicateOriginError
from goldsim.pool import FeedbackItem, RewardPool, head_sequence

UP = np.array([1.0])


def item(origin, reward=0.0, radius=0.5):
    return FeedbackItem(origin=origin, reward=reward, direction=UP, radius=radius)


def run_pool(delays):
    """Drive a RewardPool through rounds 1..len(delays); return head per round."""
    horizon = len(delays)
    buckets = {t: [] for t in range(1, horizon + 1)}
    for s, d in enumerate(delays, start=1):
        if s + d <= horizon:
            buckets[s + d].append(item(s))
    pool = RewardPool()
    heads = []
    for t in range(1, horizon + 1):
        pool.enqueue_batch(buckets[t])
        got = pool.dequeue_head(t)
        heads.append(got.origin if got is not None else None)
    return pool, heads


class TestEnqueue:
    def test_single_arrival(self):
        pool = RewardPool()
        pool.enqueue_batch([item(2)])
        assert pool.pending_origins() == [2]

    def test_empty_batch(self):
        pool = RewardPool()
        pool.enqueue_batch([])
        assert len(pool) == 0

    def test_out_of_order_arrivals(self):
        pool = RewardPool()
        pool.enqueue_batch([item(5)])
        pool.enqueue_batch([item(4)])
        assert pool.pending_origins() == [4, 5]

    def test_duplicate_origin_rejected(self):
        pool = RewardPool()
        pool.enqueue_batch([item(3)])
        with pytest.raises(DuplicateOriginError):
            pool.enqueue_batch([item(3)])

    def test_duplicate_after_consumption_rejected(self):
        pool = RewardPool()
        pool.enqueue_batch([item(3)])
        pool.dequeue_head(3)
        with pytest.raises(DuplicateOriginError):
            pool.enqueue_batch([item(3)])


class TestDequeueHead:
    def test_replay_with_leading_silence(self):
        # delays (3,0,2,0,1) -> heads (inf, 2, inf, 1, 3), empty rounds {1, 3}
        pool, heads = run_pool([3, 0, 2, 0, 1])
        assert heads == [None, 2, None, 1, 3]
        assert pool.stats.empty_rounds == 2
        assert pool.last_head == 3

    def test_replay_with_out_of_order_arrivals(self):
        # delays (0,3,1,2,0,1) -> heads (1, inf, inf, 3, 2, 4)
        _, heads = run_pool([0, 3, 1, 2, 0, 1])
        assert heads == [1, None, None, 3, 2, 4]

    def test_synchronous_heads(self):
        _, heads = run_pool([0] * 8)
        assert heads == list(range(1, 9))

    def test_empty_dequeue_convention(self):
        pool = RewardPool()
        assert pool.dequeue_head(1) is None
        assert pool.last_head == float("inf")
        assert pool.stats.empty_rounds == 1


class TestPoolStats:
    def test_empty_round_count(self):
        pool, _ = run_pool([3, 0, 2, 0, 1])
        assert pool.pool_stats()["empty_rounds"] == 2

    def test_max_lag(self):
        # round 4 consumes origin 1 (lag 3); round 5 consumes origin 3 (lag 2)
        pool, _ = run_pool([3, 0, 2, 0, 1])
        assert pool.pool_stats()["max_lag"] == 3

    def test_synchronous_stats(self):
        pool, _ = run_pool([0] * 10)
        stats = pool.pool_stats()
        assert stats["empty_rounds"] == 0
        assert stats["max_lag"] == 0


def _check_max_delay_bounds(delays):
    """Empty rounds, dequeue lag, and pool size never exceed the running max delay."""
    horizon = len(delays)
    out = head_sequence(delays)
    running_max = np.maximum.accumulate(np.asarray(delays, dtype=np.int64))
    assert np.all(out["empty_counts"] <= running_max), "empty-step bound violated"
    for t in range(1, horizon + 1):
        s = out["heads"][t - 1]
        if s >= 0:
            assert t - s <= running_max[t - 1], "lag bound violated"
    assert np.all(out["pool_sizes"] <= running_max), "memory bound violated"


@settings(max_examples=300, deadline=None)
@given(st.lists(st.integers(0, 30), min_size=1, max_size=120))
def test_pool_max_delay_bounds_random_schedules(delays):
    _check_max_delay_bounds(delays)


def test_conservation_when_drained():
    rng = np.random.default_rng(5)
    for _ in range(50):
        horizon = 80
        delays = rng.integers(0, 12, size=horizon)
        pad = int(delays.max()) + 1
        buckets = {t: [] for t in range(1, horizon + pad + 1)}
        for s, d in enumerate(delays, start=1):
            buckets[s + d].append(item(s))
        pool = RewardPool()
        dequeued = []
        for t in range(1, horizon + pad + 1):
            pool.enqueue_batch(buckets[t])
            got = pool.dequeue_head(t)
            if got is not None:
                dequeued.append(got.origin)
        # every origin consumed exactly once; out-of-order consumption is
        # expected when a newer reward arrives before an older one
        assert sorted(dequeued) == list(range(1, horizon + 1))
        assert len(pool) == 0


def test_head_sequence_matches_reward_pool():
    rng = np.random.default_rng(17)
    for _ in range(25):
        delays = rng.integers(0, 9, size=60)
        out = head_sequence(delays)
        _, heads = run_pool(list(delays))
        expected = [h if h is not None else -1 for h in heads]
        assert list(out["heads"]) == expected


def test_feedback_item_validation():
    with pytest.raises(ValueError):
        FeedbackItem(origin=0, reward=1.0, direction=UP, radius=0.5)
    with pytest.raises(ValueError):
        FeedbackItem(origin=1, reward=1.0, direction=UP, radius=0.0)
    with pytest.raises(ValueError):
        FeedbackItem(origin=1, reward=1.0, direction=np.array([0.5]), radius=0.5)
