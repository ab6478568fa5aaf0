import io

import numpy as np
import pytest

from sharedeffort import (
    BeliefState,
    Game,
    IsfpConfig,
    NoBestResponseError,
    Profile,
    detect_ne,
    evaluate,
    isfp_step,
    predict_two_player,
    run_isfp,
    verify_ne,
)


class TestDetectNE:
    def test_example_equilibrium_detected(self, example_one):
        belief = BeliefState(avg=example_one.profile([[5, 0], [20, 0]]))
        assert detect_ne(example_one, belief)

    def test_example_non_equilibrium_rejected(self, example_one):
        belief = BeliefState(avg=example_one.profile([[4, 1], [10, 10]]))
        assert not detect_ne(example_one, belief)

    def test_zero_profile_rejected(self, example_one):
        assert not detect_ne(example_one, BeliefState(avg=example_one.zero_profile()))


class TestStep:
    def test_theta_zero_moves_toward_steep(self):
        game = Game(0.0, (1, 1), (1, 2))
        start = game.profile([[1, 0], [1, 0]])
        stepped = isfp_step(game, BeliefState(avg=start, alpha_weight=1.0))
        # best response is all-in on the high project; the average moves halfway
        assert stepped.avg.x[:, 1] == pytest.approx([0.5, 0.5])
        assert stepped.t == 2

    def test_alpha_zero_is_pure_best_response(self):
        game = Game(0.0, (1, 1), (1, 2))
        start = game.profile([[1, 0], [1, 0]])
        stepped = isfp_step(game, BeliefState(avg=start, alpha_weight=0.0))
        assert stepped.avg.x[:, 1] == pytest.approx([1.0, 1.0])

    def test_equilibrium_is_fixed_point(self):
        game = Game(0.5, (1, 1), (1, 2))
        witness = predict_two_player(game).witness
        belief = BeliefState(avg=witness, alpha_weight=1.0)
        assert detect_ne(game, belief)
        stepped = isfp_step(game, belief)
        assert np.max(np.abs(stepped.avg.x - witness.x)) <= 1e-12

    def test_no_best_response_raises(self):
        game = Game(0.5, (1.0, 1.0), (9.0, 10.0))
        belief = BeliefState(avg=game.profile([[1.0, 0.0], [0.4, 0.0]]))
        with pytest.raises(NoBestResponseError):
            isfp_step(game, belief)

    def test_budget_feasibility_preserved(self):
        rng = np.random.default_rng(3)
        game = Game(0.4, (1, 2, 0.7), (1, 1.6))
        rows = np.array([rng.dirichlet(np.ones(2)) * b for b in game.budgets])
        belief = BeliefState(avg=Profile(rows), alpha_weight=1.0)
        steps = 0
        for _ in range(8):
            try:
                belief = isfp_step(game, belief)
            except NoBestResponseError:
                break  # dropped attempt; feasibility held up to here
            game.validate_profile(belief.avg)
            steps += 1
        assert steps >= 1

    def test_step_size_bound(self):
        game = Game(0.3, (1, 2), (1, 1.4))
        rng = np.random.default_rng(5)
        rows = np.array([rng.dirichlet(np.ones(2)) * b for b in game.budgets])
        belief = BeliefState(avg=Profile(rows), alpha_weight=1.0)
        for _ in range(6):
            before = belief.avg.x
            t = belief.t
            belief = isfp_step(game, belief)
            step = np.max(np.abs(belief.avg.x - before))
            assert step <= max(game.budgets) / (belief.alpha_weight * t + 1) + 1e-12


class TestRun:
    def test_theta_zero_converges_everywhere(self):
        rng = np.random.default_rng(7)
        for trial in range(15):
            n = int(rng.integers(2, 5))
            game = Game(0.0, tuple(rng.uniform(0.5, 2, n)), tuple(rng.uniform(0.5, 2, 2)))
            cfg = IsfpConfig(alpha_weight=0.0, seed=trial, stop_at_first=False)
            result = run_isfp(game, cfg)
            assert result.converged
            assert result.efficiency == pytest.approx(1.0, abs=1e-9)
            assert all(r.converged for r in result.restarts)

    def test_converged_profile_verifies(self):
        game = Game(0.5, (1, 1), (1, 2))
        result = run_isfp(game, IsfpConfig(alpha_weight=0.0, seed=2))
        assert result.converged
        assert verify_ne(game, result.profile).is_ne

    def test_not_exists_never_converges(self):
        game = Game(0.5, (1, 1), (1.5, 2))
        for weight in (0.0, 1.0):
            result = run_isfp(game, IsfpConfig(alpha_weight=weight, seed=4))
            assert not result.converged

    def test_dropped_restarts_are_recorded(self):
        # all-positive opponent bids make non-attainment reachable, so some
        # restart should be dropped rather than crash
        game = Game(0.5, (1.0, 1.0), (9.0, 10.0))
        result = run_isfp(game, IsfpConfig(alpha_weight=0.0, seed=0,
                                           stop_at_first=False, restarts=30))
        drops = [r for r in result.restarts if r.dropped]
        assert result.restarts  # ran
        for record in drops:
            assert "no best response" in record.dropped

    def test_trace_is_deterministic(self):
        game = Game(0.3, (1, 2), (1, 2))
        buffers = []
        for _ in range(2):
            buf = io.StringIO()
            run_isfp(game, IsfpConfig(seed=42, restarts=3, max_iterations=10,
                                      stop_at_first=False), trace=buf)
            buffers.append(buf.getvalue())
        assert buffers[0] == buffers[1]
        header = buffers[0].splitlines()[0]
        assert header == "restart,iteration,player,project,avg"

    def test_restart_seeds_are_independent_of_order(self):
        # restart k alone reproduces the same initial rows as within a batch
        from sharedeffort.isfp import _initial_rows
        game = Game(0.3, (1, 2), (1, 2))
        rows_in_batch = _initial_rows(game, np.random.default_rng([9, 3]))
        rows_alone = _initial_rows(game, np.random.default_rng([9, 3]))
        assert rows_in_batch == rows_alone

    def test_iterations_counts_steps_to_certification(self):
        game = Game(0.5, (1, 1), (1, 2))
        result = run_isfp(game, IsfpConfig(alpha_weight=0.0, seed=2))
        report = evaluate(game, result.profile)
        assert result.iterations <= 50
        assert report.utilities.sum() > 0
