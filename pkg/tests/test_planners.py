import json

import numpy as np
import pytest

from mgpi.bellman import apply_bellman
from mgpi.errors import AssumptionViolated, MaxItersExceeded, ParameterOutOfRange
from mgpi.game import INFINITE, game_from_arrays, random_game
from mgpi.planners import (
    NaiveOutcome,
    PlannerConfig,
    check_assumption1,
    cycling_archive,
    generalized_pi,
    generalized_pi_iterates,
    hoffman_karp,
    min_lookahead,
    naive_pi,
    search_cycling,
    solve_equilibrium,
    lookahead_pi_rate,
    validate_cycling_archive,
    value_iteration,
)
from oracles import howard_pi


class TestRateFormulas:
    def test_condition_example(self):
        rep = check_assumption1(0.5, 3, 4)
        assert rep.assumption1_lhs == pytest.approx(0.6875, abs=1e-15)
        assert rep.assumption1_satisfied

    def test_kappa_example(self):
        assert lookahead_pi_rate(0.5, 2, 4) == pytest.approx(0.59375, abs=1e-15)

    def test_min_lookahead_examples(self):
        assert min_lookahead(0.5, 3) == 4
        assert min_lookahead(0.5, INFINITE) == 4
        assert min_lookahead(0.9, 5) == 35

    def test_min_lookahead_is_minimal(self):
        for alpha in (0.3, 0.5, 0.8, 0.95):
            for m in (0, 1, 3, INFINITE):
                H = min_lookahead(alpha, m)
                assert check_assumption1(alpha, m, H).assumption1_satisfied
                if H > 1:
                    assert not check_assumption1(alpha, m, H - 1).assumption1_satisfied

    def test_large_lookahead_limit(self):
        assert check_assumption1(0.9, INFINITE, 400).assumption1_lhs < 1e-15

    @pytest.mark.parametrize("alpha, m, H", [(1.0, 1, 1), (0.5, -1, 2), (0.5, 1, 0), (0.5, 1.5, 2)])
    def test_rejects_bad_parameters(self, alpha, m, H):
        with pytest.raises(ParameterOutOfRange):
            check_assumption1(alpha, m, H)


class TestValueIteration:
    def test_self_loop(self, self_loop):
        V, trace = value_iteration(self_loop, PlannerConfig(stop_tol=1e-10, max_iters=10_000))
        assert V[0] == pytest.approx(5.0, abs=1e-8)
        assert trace.termination == "converged"

    def test_zero_reward(self):
        game = game_from_arrays([np.zeros((2, 2))] * 2, [np.full((2, 2, 2), 0.5)] * 2, 0.9)
        V, trace = value_iteration(game, PlannerConfig())
        assert np.all(V == 0) and trace.iterations == 0

    def test_residual_ratio_at_most_discount(self):
        game = random_game(10, 10, (3, 3), discount=0.8)
        _, trace = value_iteration(game, PlannerConfig(stop_tol=1e-9))
        r = trace.residuals
        assert np.all(r[1:] <= 0.8 * r[:-1] + 1e-15)

    def test_max_iters_carries_state(self):
        game = random_game(1, 5, discount=0.99)
        with pytest.raises(MaxItersExceeded) as info:
            value_iteration(game, PlannerConfig(max_iters=3))
        assert info.value.trace.iterations == 3
        assert info.value.value is not None


class TestGeneralizedPI:
    def test_no_rollout_depth_two_equals_value_iteration(self):
        game = random_game(4, 8, (3, 3), discount=0.7)
        its = generalized_pi_iterates(game, np.zeros(8), 0, 2, 15)
        V = np.zeros(8)
        for k in range(16):
            assert np.max(np.abs(its[k] - V)) <= 1e-12
            V, _ = apply_bellman(game, V)

    def test_start_at_equilibrium(self):
        game = random_game(5, 6, (2, 2), discount=0.5)
        J = solve_equilibrium(game)
        _, _, trace = generalized_pi(game, PlannerConfig(m=3, H=4, v0=J, stop_tol=1e-9))
        assert trace.iterations == 0

    def test_rate_on_example(self):
        game = random_game(6, 10, (3, 3), discount=0.5)
        J = solve_equilibrium(game)
        _, _, trace = generalized_pi(game, PlannerConfig(m=3, H=4), reference=J)
        kappa = lookahead_pi_rate(0.5, 3, 4)
        e = trace.sup_errors
        assert np.all(e <= kappa ** np.arange(e.size) * e[0] + 1e-8)

    def test_strict_mode(self):
        game = random_game(0, 3, discount=0.9)
        with pytest.raises(AssumptionViolated):
            generalized_pi(game, PlannerConfig(m=1, H=2, strict=True))

    def test_agrees_with_value_iteration(self):
        game = random_game(7, 12, (4, 4), discount=0.8)
        J = solve_equilibrium(game)
        V, pol, _ = generalized_pi(game, PlannerConfig(m=INFINITE, H=min_lookahead(0.8, INFINITE), stop_tol=1e-11))
        assert np.max(np.abs(V - J)) < 1e-7


class TestSinglePlayerReduction:
    """With one minimizer action everywhere the game is an MDP."""

    @pytest.mark.parametrize("seed", range(5))
    def test_naive_matches_howard(self, seed):
        game = random_game(seed, 8, (3, 1), discount=0.9)
        J, _ = howard_pi(game)
        trace, outcome = naive_pi(game, PlannerConfig(m=INFINITE, stop_tol=1e-11))
        assert outcome is NaiveOutcome.CONVERGED
        assert np.max(np.abs(trace.final_value - J)) < 1e-8

    @pytest.mark.parametrize("seed", range(5))
    def test_hoffman_karp_matches_howard(self, seed):
        game = random_game(seed, 8, (3, 1), discount=0.9)
        J, _ = howard_pi(game)
        V, _ = hoffman_karp(game, PlannerConfig(stop_tol=1e-11))
        assert np.max(np.abs(V - J)) < 1e-8


class TestHoffmanKarp:
    def test_agrees_with_value_iteration(self):
        game = random_game(8, 8, (3, 3), discount=0.8)
        V, _ = hoffman_karp(game, PlannerConfig(stop_tol=1e-11))
        assert np.max(np.abs(V - solve_equilibrium(game))) < 1e-8

    def test_start_at_equilibrium(self):
        game = random_game(8, 5, (2, 2), discount=0.6)
        J = solve_equilibrium(game)
        _, trace = hoffman_karp(game, PlannerConfig(v0=J, stop_tol=1e-9))
        assert trace.iterations == 0


class TestNaiveCycling:
    def test_known_cycling_seed(self):
        """Seed 274 of the search family is a genuine two-cycle."""
        instances, tally = search_cycling(1, first_seed=274)
        assert tally["cycling"] == 1
        r = instances[0]["residuals"]
        assert r[-1] >= r[-3]

    def test_never_claims_convergence_above_tolerance(self):
        for seed in range(50):
            game = random_game(seed, 3, (2, 2), discount=0.9)
            trace, outcome = naive_pi(game, PlannerConfig(m=INFINITE, stop_tol=1e-9, max_iters=100))
            if outcome is NaiveOutcome.CONVERGED:
                assert trace.residuals[-1] <= 1e-9

    def test_archive_round_trip(self, tmp_path):
        instances, tally = search_cycling(700)
        assert any(i["seed"] == 274 for i in instances)
        archive = json.loads(json.dumps(cycling_archive(instances, tally)))
        assert len(validate_cycling_archive(archive)) == len(instances)

    def test_archive_rejects_tampering(self):
        instances, tally = search_cycling(1, first_seed=274)
        archive = json.loads(json.dumps(cycling_archive(instances, tally)))
        archive["instances"][0]["game"]["rewards"][0][3] = 0.123
        with pytest.raises(ValueError):
            validate_cycling_archive(archive)
