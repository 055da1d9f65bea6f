from __future__ import annotations

import numpy as np
import pytest

from goldsim.errors import ConfigError
from goldsim.games import (
    anti_monotone_game,
    check_dsc,
    finite_difference_gradient,
    kelly_game,
    kelly_game_multi,
    kelly_gradient,
    kelly_payoff,
    linear_game,
    quadratic_game,
)
from goldsim.geometry import make_box, make_interval

# symmetric 2-player Kelly equilibrium bid for g=(2,2), c=1: root of 4x^2+2x-1
KELLY_STAR = (-1.0 + np.sqrt(5.0)) / 4.0


def two_player_kelly():
    return kelly_game(gains=[2.0, 2.0], entry_barrier=1.0, budgets=[1.0, 1.0])


class TestKellyPayoff:
    def test_zero_bids(self):
        a = two_player_kelly().aux
        assert kelly_payoff(a, 0, [0.0, 0.0]) == 0.0
        assert kelly_payoff(a, 1, [0.0, 0.0]) == 0.0

    def test_unit_bids(self):
        a = two_player_kelly().aux
        assert kelly_payoff(a, 0, [1.0, 1.0]) == pytest.approx(2 / 3 - 1, abs=1e-12)

    def test_equilibrium_gradients_vanish(self):
        a = two_player_kelly().aux
        for i in range(2):
            assert kelly_gradient(a, i, [KELLY_STAR, KELLY_STAR]) == pytest.approx(
                0.0, abs=1e-12
            )

    def test_entry_barrier_required(self):
        with pytest.raises(ConfigError):
            kelly_game(gains=[2.0], entry_barrier=0.0, budgets=[1.0])


class TestKellyGradient:
    def test_gradient_at_origin(self):
        a = two_player_kelly().aux
        assert kelly_gradient(a, 0, [0.0, 0.0]) == pytest.approx(1.0, abs=1e-14)
        assert kelly_gradient(a, 1, [0.0, 0.0]) == pytest.approx(1.0, abs=1e-14)

    def test_matches_finite_differences(self):
        game = two_player_kelly()
        rng = np.random.default_rng(1)
        for _ in range(50):
            profile = tuple(s.sample(rng) for s in game.action_sets)
            for i in range(2):
                fd = finite_difference_gradient(game, i, profile)
                np.testing.assert_allclose(game.gradient(i, profile), fd, atol=1e-6)

    def test_single_player_interior_optimum(self):
        # g=4, c=1: gradient 4/(1+x)^2 - 1 = 0 at x = 1; golden-section oracle
        game = kelly_game(gains=[4.0], entry_barrier=1.0, budgets=[2.0])

        def u(x):
            return game.payoff(0, (np.array([x]),))

        lo, hi = 0.0, 2.0
        invphi = (np.sqrt(5) - 1) / 2
        for _ in range(80):
            m1 = hi - invphi * (hi - lo)
            m2 = lo + invphi * (hi - lo)
            if u(m1) < u(m2):
                lo = m1
            else:
                hi = m2
        x_opt = (lo + hi) / 2
        assert x_opt == pytest.approx(1.0, abs=1e-6)
        assert game.gradient(0, (np.array([1.0]),))[0] == pytest.approx(0.0, abs=1e-12)


def test_gradient_finite_difference_invariant_all_games():
    sets2 = (make_box([0, 0], [1, 1]), make_box([0, 0], [1, 1]))
    games = [
        two_player_kelly(),
        quadratic_game([[0.3, 0.7], [0.5, 0.2]], sets2),
        linear_game([[0.5, -0.2], [1.0, 0.1]], sets2),
    ]
    rng = np.random.default_rng(2)
    for game in games:
        for _ in range(20):
            profile = tuple(s.sample(rng) for s in game.action_sets)
            for i in range(game.players):
                fd = finite_difference_gradient(game, i, profile)
                grad = game.gradient(i, profile)
                np.testing.assert_allclose(grad, fd, rtol=1e-5, atol=1e-5)
                assert np.linalg.norm(grad) <= game.lipschitz_value + 1e-9


def test_kelly_own_bid_concavity():
    game = two_player_kelly()
    rng = np.random.default_rng(3)
    h = 1e-4
    for _ in range(200):
        x = tuple(s.sample(rng) for s in game.action_sets)
        for i in range(2):
            up = tuple(v + h if j == i else v for j, v in enumerate(x))
            dn = tuple(v - h if j == i else v for j, v in enumerate(x))
            second = game.payoff(i, up) - 2 * game.payoff(i, x) + game.payoff(i, dn)
            assert second <= 1e-9


def test_batch_evaluators_match_scalar():
    game = two_player_kelly()
    rng = np.random.default_rng(4)
    mats = [s.sample(rng, size=64) for s in game.action_sets]
    for i in range(2):
        pay = game.eval_payoff_batch(i, mats)
        grad = game.eval_gradient_batch(i, mats)
        for k in (0, 13, 63):
            profile = tuple(m[k] for m in mats)
            assert pay[k] == pytest.approx(game.payoff(i, profile), abs=1e-14)
            np.testing.assert_allclose(grad[k], game.gradient(i, profile), atol=1e-14)


class TestCheckDsc:
    def test_kelly_no_violations(self):
        report = check_dsc(two_player_kelly(), pairs=10_000, rng=np.random.default_rng(5))
        assert report.violations == 0
        assert report.worst_value < 0

    def test_decoupled_quadratic(self):
        sets = (make_interval(0, 1), make_interval(0, 1))
        game = quadratic_game([[0.2], [0.8]], sets)
        report = check_dsc(game, pairs=5_000, rng=np.random.default_rng(6))
        assert report.violations == 0
        # the weighted sum equals -2 * ||x' - x||^2 here
        assert report.worst_value < 0

    def test_anti_monotone_all_violations(self):
        report = check_dsc(anti_monotone_game(2), pairs=5_000, rng=np.random.default_rng(7))
        assert report.violations == report.pairs

    def test_random_kelly_instances(self):
        rng = np.random.default_rng(8)
        for _ in range(5):
            n = int(rng.integers(2, 5))
            game = kelly_game(
                gains=rng.uniform(0.5, 4.0, size=n),
                entry_barrier=float(rng.uniform(0.1, 2.0)),
                budgets=rng.uniform(0.5, 3.0, size=n),
            )
            report = check_dsc(game, pairs=2_000, rng=rng)
            assert report.violations == 0

    def test_weights_must_be_positive(self):
        with pytest.raises(ConfigError):
            check_dsc(two_player_kelly(), weights=[1.0, 0.0], pairs=10)


class TestMultiResourceKelly:
    def game(self):
        return kelly_game_multi(
            gains=[[2.0, 3.0], [2.0, 1.5]],
            entry_barriers=[1.0, 0.8],
            budgets=[[1.0, 1.0], [1.0, 2.0]],
        )

    def test_gradient_matches_finite_differences(self):
        game = self.game()
        rng = np.random.default_rng(11)
        for _ in range(30):
            profile = tuple(s.sample(rng) for s in game.action_sets)
            for i in range(2):
                fd = finite_difference_gradient(game, i, profile)
                np.testing.assert_allclose(game.gradient(i, profile), fd, atol=1e-6)

    def test_resources_decouple(self):
        # per-resource payoff equals the single-resource auction's payoff
        game = self.game()
        x = (np.array([0.4, 0.6]), np.array([0.2, 0.9]))
        split = 0.0
        for r, c in enumerate([1.0, 0.8]):
            a = kelly_game([2.0 if r == 0 else 3.0, 2.0 if r == 0 else 1.5], c, [1.0, 1.0]).aux
            split += kelly_payoff(a, 0, [x[0][r], x[1][r]])
        assert game.payoff(0, x) == pytest.approx(split, abs=1e-12)

    def test_symmetric_equilibrium_per_resource(self):
        # symmetric per-resource instance: each resource solves 4z^2 + 2z = 1
        from goldsim.equilibrium import solve_equilibrium

        game = kelly_game_multi(
            gains=[[2.0, 2.0], [2.0, 2.0]],
            entry_barriers=[1.0, 1.0],
            budgets=[[1.0, 1.0], [1.0, 1.0]],
        )
        res = solve_equilibrium(game, tol=1e-10)
        assert res.converged
        star = KELLY_STAR
        for i in range(2):
            np.testing.assert_allclose(res.point[i], [star, star], atol=1e-6)

    def test_monotone(self):
        report = check_dsc(self.game(), pairs=3_000, rng=np.random.default_rng(12))
        assert report.violations == 0

    def test_runs_on_python_engine(self):
        from goldsim.agent import default_schedules
        from goldsim.delays import PowerDelay
        from goldsim.engine import kernel_eligible, simulate

        game = self.game()
        assert not kernel_eligible(game)
        sch = [default_schedules(s, b=0.2, c=0.85, alpha=0.2) for s in game.action_sets]
        trace = simulate(game, sch, [PowerDelay(scale=1.0, alpha=0.2)] * 2, 300, 0)
        assert trace.engine == "python"
        for i, s in enumerate(game.action_sets):
            for row in trace.played[i][::50]:
                assert s.contains(row, tol=1e-9)
