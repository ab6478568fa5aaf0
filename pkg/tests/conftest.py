"""Shared fixtures and independent oracles.

The oracles here intentionally re-derive results from first principles
(plain loops, dynamic programming, exhaustive enumeration) so that tests
never trust the code paths they are checking.
"""

from __future__ import annotations

import itertools

import numpy as np
import pytest

from sharedeffort import Game, Profile


@pytest.fixture
def example_one() -> Game:
    """Two authors, two papers: theta 0.2, budgets (5, 20), coefficients (4, 2)."""
    return Game(theta=0.2, budgets=(5.0, 20.0), alphas=(4.0, 2.0))


def naive_utilities(game: Game, rows) -> list[float]:
    """From-definition recomputation of all utilities, plain Python loops."""
    n, m = game.n, game.m
    utilities = [0.0] * n
    for w in range(m):
        col = [rows[i][w] for i in range(n)]
        total = sum(col)
        if total <= 0:
            continue
        if game.theta == 0.0:
            members = list(range(n))
        else:
            cut = game.theta * max(col) - game.membership_tol
            members = [i for i in range(n) if col[i] > 0 and col[i] >= cut]
        value = game.alphas[w] * total
        for i in members:
            utilities[i] += value / len(members)
    return utilities


def subset_sum_dp(items, cap) -> int:
    """Maximum subset sum not exceeding cap, by boolean DP over sums."""
    reachable = {0}
    for s in items:
        reachable |= {r + s for r in reachable if r + s <= cap}
    return max(reachable)


def brute_force_cycle_violation(game: Game, profile: Profile, eps=1e-9):
    """Exhaustively try every whole-budget rotation; return a violating cycle or None.

    Independent of the library's enumeration: walks raw permutations of
    every subset and recomputes utilities through naive_utilities.
    """
    rows = [list(r) for r in profile.x]
    base = naive_utilities(game, rows)
    singles = {}
    for i in range(game.n):
        row = rows[i]
        w = max(range(game.m), key=lambda j: row[j])
        if row[w] >= game.budgets[i] - 1e-9 and sum(row) - row[w] <= 1e-9:
            singles[i] = w
    players = sorted(singles)
    for size in range(2, len(players) + 1):
        for subset in itertools.combinations(players, size):
            for perm in itertools.permutations(subset):
                if perm[0] != subset[0]:
                    continue  # fix rotation start; cyclic duplicates are equivalent
                if any(singles[perm[idx]] == singles[perm[(idx + 1) % size]]
                       for idx in range(size)):
                    continue
                new_rows = [list(r) for r in rows]
                for idx, i in enumerate(perm):
                    target = singles[perm[(idx + 1) % size]]
                    new_rows[i] = [0.0] * game.m
                    new_rows[i][target] = game.budgets[i]
                utils = naive_utilities(game, new_rows)
                gains = [utils[i] - base[i] for i in perm]
                if all(g >= -eps for g in gains) and any(g > eps for g in gains):
                    return perm
    return None


def random_game(rng: np.random.Generator, n=None, m=2, theta=None) -> Game:
    n = n if n is not None else int(rng.integers(2, 5))
    theta = theta if theta is not None else float(rng.uniform(0.05, 0.95))
    return Game(
        theta=theta,
        budgets=tuple(rng.uniform(0.3, 2.0, n)),
        alphas=tuple(rng.uniform(0.3, 2.0, m)),
    )


def random_profile(game: Game, rng: np.random.Generator,
                   full_budget=False) -> Profile:
    rows = np.empty((game.n, game.m))
    for i in range(game.n):
        if full_budget:
            rows[i] = rng.dirichlet(np.ones(game.m)) * game.budgets[i]
        else:
            parts = rng.dirichlet(np.ones(game.m + 1)) * game.budgets[i]
            rows[i] = parts[: game.m]
    return Profile(rows)
