import json

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from sharedeffort import (
    Game,
    InvariantViolation,
    ParseError,
    Profile,
    dump_game,
    dump_profile,
    evaluate,
    level_structure,
    load_game,
    load_profile,
    optimal_welfare,
    share_set,
    social_welfare,
)
from conftest import naive_utilities, random_game, random_profile


class TestShareSet:
    def test_example_project_one_shares_both(self, example_one):
        prof = example_one.profile([[4, 1], [10, 10]])
        assert share_set(example_one, prof, 0) == {0, 1}

    def test_example_project_two_drops_small_bid(self, example_one):
        prof = example_one.profile([[4, 1], [10, 10]])
        assert share_set(example_one, prof, 1) == {1}

    def test_vacant_project_is_empty(self, example_one):
        prof = example_one.profile([[5, 0], [20, 0]])
        assert share_set(example_one, prof, 1) == frozenset()

    def test_exact_threshold_bid_is_included(self):
        game = Game(theta=0.5, budgets=(1, 1), alphas=(1, 1))
        prof = game.profile([[0.5, 0], [1.0, 0]])
        assert share_set(game, prof, 0) == {0, 1}


class TestEvaluate:
    def test_example_shares_and_utilities(self, example_one):
        prof = example_one.profile([[4, 1], [10, 10]])
        report = evaluate(example_one, prof)
        assert report.shares[0, 0] == pytest.approx(28, abs=1e-12)
        assert report.shares[1, 0] == pytest.approx(28, abs=1e-12)
        assert report.shares[1, 1] == pytest.approx(22, abs=1e-12)
        assert report.utilities[0] == pytest.approx(28, abs=1e-12)
        assert report.utilities[1] == pytest.approx(50, abs=1e-12)
        assert report.suppressed[1] == {0}
        assert report.dominated[1] == {0}

    def test_full_budgets_split_evenly(self, example_one):
        prof = example_one.profile([[5, 0], [20, 0]])
        report = evaluate(example_one, prof)
        assert report.shares[0, 0] == pytest.approx(50)
        assert report.shares[1, 0] == pytest.approx(50)
        assert list(report.utilities) == pytest.approx([50, 50])

    def test_zero_profile(self, example_one):
        report = evaluate(example_one, example_one.zero_profile())
        assert list(report.utilities) == [0, 0]
        assert all(s == frozenset() for s in report.sharers)

    def test_suppressed_subset_of_dominated(self):
        rng = np.random.default_rng(5)
        for _ in range(30):
            game = random_game(rng)
            report = evaluate(game, random_profile(game, rng))
            for w in range(game.m):
                assert report.suppressed[w] <= report.dominated[w]
                assert not report.suppressed[w] & report.sharers[w]


class TestWelfare:
    def test_example_welfare(self, example_one):
        prof = example_one.profile([[4, 1], [10, 10]])
        assert social_welfare(example_one, prof) == pytest.approx(78)

    def test_zero_profile_welfare(self, example_one):
        assert social_welfare(example_one, example_one.zero_profile()) == 0

    def test_all_on_first_project(self, example_one):
        prof = example_one.profile([[5, 0], [20, 0]])
        assert social_welfare(example_one, prof) == pytest.approx(100)

    def test_optimal_welfare_examples(self, example_one):
        assert optimal_welfare(example_one) == pytest.approx(100)
        assert optimal_welfare(Game(0.5, (1,), (1,))) == pytest.approx(1)
        assert optimal_welfare(Game(0.5, (1, 2), (3, 1))) == pytest.approx(9)


class TestLevelStructure:
    def test_two_levels(self):
        game = Game(0.5, budgets=(1, 1, 2), alphas=(3, 1, 1))
        levels = level_structure(game)
        assert levels.l == 2 and levels.p == 2 and levels.k == 1
        assert levels.project_levels == ((3.0, 1), (1.0, 2))
        assert levels.budget_levels == ((2.0, 1), (1.0, 2))
        assert levels.project_members == ((0,), (1, 2))

    def test_single_level(self):
        levels = level_structure(Game(0.5, (5, 5), (2, 2)))
        assert levels.l == 1 and levels.k == 2 and levels.p == 1

    def test_example(self, example_one):
        levels = level_structure(example_one)
        assert levels.k == 1 and levels.l == 2 and levels.p == 2


class TestInvariants:
    @given(st.integers(0, 2 ** 32 - 1))
    @settings(max_examples=60, deadline=None)
    def test_share_conservation_and_max_contributor(self, seed):
        rng = np.random.default_rng(seed)
        game = random_game(rng, m=int(rng.integers(1, 4)))
        prof = random_profile(game, rng)
        report = evaluate(game, prof)
        for w in range(game.m):
            total = prof.x[:, w].sum()
            if total > 0:
                assert report.sharers[w], "contributed project must have a sharer"
                assert int(np.argmax(prof.x[:, w])) in report.sharers[w]
                assert report.shares[:, w].sum() == pytest.approx(
                    report.values[w], rel=1e-12)

    @given(st.integers(0, 2 ** 32 - 1))
    @settings(max_examples=60, deadline=None)
    def test_threshold_monotone(self, seed):
        rng = np.random.default_rng(seed)
        thetas = sorted(rng.uniform(0, 1, 3))
        n, m = int(rng.integers(2, 5)), int(rng.integers(1, 4))
        budgets = tuple(rng.uniform(0.3, 2.0, n))
        alphas = tuple(rng.uniform(0.3, 2.0, m))
        prof = None
        previous = None
        for theta in thetas:
            game = Game(theta, budgets, alphas)
            if prof is None:
                prof = random_profile(game, rng)
            current = [share_set(game, prof, w) for w in range(m)]
            if previous is not None:
                for small, large in zip(current, previous):
                    assert small <= large
            previous = current

    def test_theta_zero_everyone_shares_nonvacant(self):
        # The zero-threshold game must be a potential game: every player of
        # the game shares every contributed project, so each utility equals
        # welfare / n.
        game = Game(0.0, (1, 2, 3), (1.0, 0.7))
        prof = game.profile([[1, 0], [0, 2], [0, 0]])
        assert share_set(game, prof, 0) == {0, 1, 2}
        report = evaluate(game, prof)
        welfare = social_welfare(game, prof)
        for u in report.utilities:
            assert u == pytest.approx(welfare / 3, rel=1e-12)

    @given(st.integers(0, 2 ** 32 - 1))
    @settings(max_examples=80, deadline=None)
    def test_matches_naive_recomputation(self, seed):
        rng = np.random.default_rng(seed)
        theta = float(rng.choice([0.0, rng.uniform(0, 1), 1.0]))
        game = random_game(rng, m=int(rng.integers(1, 4)), theta=theta)
        prof = random_profile(game, rng)
        report = evaluate(game, prof)
        expected = naive_utilities(game, prof.x.tolist())
        assert list(report.utilities) == pytest.approx(expected, abs=1e-12)


class TestValidation:
    def test_bad_theta(self):
        with pytest.raises(InvariantViolation, match="theta"):
            Game(1.5, (1,), (1,))

    def test_bad_budget(self):
        with pytest.raises(InvariantViolation, match="budgets"):
            Game(0.5, (1, 0), (1,))

    def test_bad_alpha(self):
        with pytest.raises(InvariantViolation, match="alphas"):
            Game(0.5, (1,), ())

    def test_negative_contribution(self):
        with pytest.raises(InvariantViolation, match="nonnegative"):
            Profile(np.array([[-0.1, 0.2]]))

    def test_budget_overrun(self, example_one):
        with pytest.raises(InvariantViolation, match="player 0"):
            example_one.profile([[5, 1], [0, 0]])

    def test_budget_tolerance_allows_dust(self, example_one):
        example_one.profile([[5 + 1e-10, 0], [0, 0]])

    def test_profile_is_immutable(self, example_one):
        prof = example_one.profile([[1, 1], [2, 2]])
        with pytest.raises(ValueError):
            prof.x[0, 0] = 3.0


class TestJsonInterface:
    def test_round_trip(self, tmp_path, example_one):
        path = tmp_path / "game.json"
        path.write_text(json.dumps(dump_game(example_one)))
        loaded = load_game(str(path))
        assert loaded == example_one

    def test_profile_round_trip(self, tmp_path, example_one):
        prof = example_one.profile([[4, 1], [10, 10]])
        path = tmp_path / "profile.json"
        path.write_text(json.dumps(dump_profile(prof)))
        loaded = load_profile(str(path), example_one)
        assert np.array_equal(loaded.x, prof.x)

    def test_missing_field_named(self, tmp_path):
        path = tmp_path / "bad.json"
        path.write_text('{"theta": 0.5, "budgets": [1]}')
        with pytest.raises(ParseError, match="alphas"):
            load_game(str(path))

    def test_wrong_type_named(self, tmp_path):
        path = tmp_path / "bad.json"
        path.write_text('{"theta": 0.5, "budgets": "x", "alphas": [1]}')
        with pytest.raises(ParseError, match="budgets"):
            load_game(str(path))

    def test_invalid_json(self, tmp_path):
        path = tmp_path / "bad.json"
        path.write_text("{")
        with pytest.raises(ParseError, match="invalid JSON"):
            load_game(str(path))
