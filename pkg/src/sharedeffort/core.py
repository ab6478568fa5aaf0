"""Shared effort games with a relative sharing threshold.

Players split personal budgets across projects.  Each project's value is
linear in the total contribution it receives and is divided equally among
the players whose bid reaches a ``theta`` fraction of the largest bid on
that project.  This module holds the game and profile types, the sharing
semantics, welfare, the dominated/suppressed classification, and the
level-structure view (grouping of equal coefficients and equal budgets)
that the closed-form existence results operate on.

Conventions: players and projects are indexed from 0.  Games keep their
inputs in the caller's order; anything that needs sorted budgets or sorted
coefficients derives a sorted view internally and maps results back.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

# Absolute slack used when testing threshold membership.  Witness profiles
# sit exactly on the threshold (e.g. a contribution of exactly theta * B),
# so a bare >= comparison would be fragile under float arithmetic.
EPS_MEMBERSHIP = 1e-9

# Absolute slack allowed on a player's budget constraint.
EPS_BUDGET = 1e-9

# Absolute gain below which a deviation does not count as profitable.
EPS_NE = 1e-9


class InvariantViolation(ValueError):
    """A game or profile field violates a structural invariant."""


class ParseError(ValueError):
    """A JSON input file is malformed or carries a bad field."""


def _as_positive_tuple(values, field: str) -> tuple[float, ...]:
    try:
        out = tuple(float(v) for v in values)
    except (TypeError, ValueError) as exc:
        raise InvariantViolation(f"{field} must be a sequence of numbers") from exc
    if not out:
        raise InvariantViolation(f"{field} must be non-empty")
    if any(not np.isfinite(v) or v <= 0.0 for v in out):
        raise InvariantViolation(f"{field} entries must be finite and > 0")
    return out


@dataclass(frozen=True)
class Game:
    """A thresholded shared effort game.

    ``theta`` is the relative sharing threshold in [0, 1], ``budgets`` the
    players' positive effort budgets and ``alphas`` the projects' positive
    value-per-effort coefficients.  ``membership_tol`` is the absolute
    slack applied to the threshold test and ``budget_tol`` the slack on
    budget feasibility.
    """

    theta: float
    budgets: tuple[float, ...]
    alphas: tuple[float, ...]
    membership_tol: float = EPS_MEMBERSHIP
    budget_tol: float = EPS_BUDGET

    def __post_init__(self) -> None:
        object.__setattr__(self, "budgets", _as_positive_tuple(self.budgets, "budgets"))
        object.__setattr__(self, "alphas", _as_positive_tuple(self.alphas, "alphas"))
        theta = float(self.theta)
        if not np.isfinite(theta) or not 0.0 <= theta <= 1.0:
            raise InvariantViolation("theta must lie in [0, 1]")
        object.__setattr__(self, "theta", theta)

    @property
    def n(self) -> int:
        return len(self.budgets)

    @property
    def m(self) -> int:
        return len(self.alphas)

    def profile(self, rows: Iterable[Iterable[float]]) -> "Profile":
        """Build a profile and validate it against this game."""
        prof = Profile(np.asarray(list(rows), dtype=float))
        self.validate_profile(prof)
        return prof

    def zero_profile(self) -> "Profile":
        return Profile(np.zeros((self.n, self.m)))

    def validate_profile(self, profile: "Profile") -> None:
        x = profile.x
        if x.shape != (self.n, self.m):
            raise InvariantViolation(
                f"profile shape {x.shape} does not match game ({self.n}, {self.m})"
            )
        spent = x.sum(axis=1)
        for i, (s, b) in enumerate(zip(spent, self.budgets)):
            if s > b + self.budget_tol:
                raise InvariantViolation(
                    f"player {i} spends {s!r} which exceeds budget {b!r}"
                )

    def sorted_budget_view(self) -> tuple[np.ndarray, np.ndarray]:
        """(permutation, values) with budgets ascending; permutation is stable."""
        perm = np.argsort(self.budgets, kind="stable")
        return perm, np.asarray(self.budgets)[perm]

    def sorted_alpha_view(self) -> tuple[np.ndarray, np.ndarray]:
        """(permutation, values) with coefficients ascending; stable."""
        perm = np.argsort(self.alphas, kind="stable")
        return perm, np.asarray(self.alphas)[perm]


@dataclass(frozen=True)
class Profile:
    """A nonnegative n-by-m contribution matrix; row i is player i's strategy."""

    x: np.ndarray

    def __post_init__(self) -> None:
        arr = np.array(self.x, dtype=float, copy=True)
        if arr.ndim != 2:
            raise InvariantViolation("profile must be a 2-D matrix")
        if not np.all(np.isfinite(arr)):
            raise InvariantViolation("profile entries must be finite")
        if (arr < 0).any():
            raise InvariantViolation("profile entries must be nonnegative")
        arr.setflags(write=False)
        object.__setattr__(self, "x", arr)

    @property
    def n(self) -> int:
        return self.x.shape[0]

    @property
    def m(self) -> int:
        return self.x.shape[1]

    def rows(self) -> list[list[float]]:
        return self.x.tolist()

    def replace_row(self, i: int, row: Sequence[float]) -> "Profile":
        new = np.array(self.x, copy=True)
        new[i, :] = row
        return Profile(new)


def share_set(game: Game, profile: Profile, project: int) -> frozenset[int]:
    """The players that share project ``project``'s value under the profile.

    A vacant project has an empty share set.  For ``theta > 0`` a player
    shares when it contributes and its bid is at least ``theta`` times the
    largest bid, minus the membership slack.  At ``theta == 0`` the
    threshold vanishes and every player shares every non-vacant project
    (this is what makes the zero-threshold game a potential game: each
    player's utility is then the welfare divided by n).
    """
    col = profile.x[:, project]
    top = col.max() if col.size else 0.0
    if top <= 0.0:
        return frozenset()
    if game.theta == 0.0:
        return frozenset(range(profile.n))
    cut = game.theta * top - game.membership_tol
    return frozenset(int(i) for i in np.nonzero((col > 0.0) & (col >= cut))[0])


@dataclass(frozen=True)
class ShareReport:
    """Per-project sharing breakdown plus the resulting player utilities.

    ``totals[w]`` is the summed contribution to project w, ``values[w]``
    its generated value, ``sharers[w]`` the share set, ``dominated[w]``
    every player outside it and ``suppressed[w]`` the positive
    contributors outside it.  ``shares`` is the n-by-m matrix of received
    value and ``utilities`` its row sums.
    """

    totals: np.ndarray
    values: np.ndarray
    sharers: tuple[frozenset[int], ...]
    dominated: tuple[frozenset[int], ...]
    suppressed: tuple[frozenset[int], ...]
    shares: np.ndarray
    utilities: np.ndarray


def evaluate(game: Game, profile: Profile) -> ShareReport:
    """Apply the sharing mechanism to a profile."""
    game.validate_profile(profile)
    x = profile.x
    n, m = x.shape
    totals = x.sum(axis=0)
    values = np.asarray(game.alphas) * totals
    all_players = frozenset(range(n))
    sharers = []
    dominated = []
    suppressed = []
    shares = np.zeros((n, m))
    for w in range(m):
        members = share_set(game, profile, w)
        sharers.append(members)
        dominated.append(all_players - members)
        contributors = frozenset(int(i) for i in np.nonzero(x[:, w] > 0)[0])
        suppressed.append(contributors - members)
        if members:
            each = values[w] / len(members)
            for i in members:
                shares[i, w] = each
    return ShareReport(
        totals=totals,
        values=values,
        sharers=tuple(sharers),
        dominated=tuple(dominated),
        suppressed=tuple(suppressed),
        shares=shares,
        utilities=shares.sum(axis=1),
    )


def social_welfare(game: Game, profile: Profile) -> float:
    """Total utility: the summed value of every project with a nonempty share set."""
    report = evaluate(game, profile)
    return float(sum(v for v, s in zip(report.values, report.sharers) if s))


def optimal_welfare(game: Game) -> float:
    """The best achievable welfare: everything on a most valuable project."""
    return max(game.alphas) * sum(game.budgets)


@dataclass(frozen=True)
class LevelStructure:
    """Distinct coefficients and budgets, grouped and sorted descending.

    ``project_levels[j] = (alpha, count)`` for the j-th largest distinct
    coefficient; ``project_members[j]`` holds the project indices of that
    level in input order.  Budgets follow the same pattern.  ``k`` counts
    the steep projects (level-0 projects).
    """

    project_levels: tuple[tuple[float, int], ...]
    budget_levels: tuple[tuple[float, int], ...]
    project_members: tuple[tuple[int, ...], ...]
    budget_members: tuple[tuple[int, ...], ...]

    @property
    def l(self) -> int:  # noqa: E743  (single-letter name is the domain term)
        return len(self.project_levels)

    @property
    def p(self) -> int:
        return len(self.budget_levels)

    @property
    def k(self) -> int:
        return self.project_levels[0][1]


def _group_desc(values: Sequence[float]) -> tuple[list[tuple[float, int]], list[tuple[int, ...]]]:
    # Exact equality groups ties; inputs meant to be equal must be identical.
    distinct = sorted(set(values), reverse=True)
    levels = []
    members = []
    for v in distinct:
        idx = tuple(i for i, u in enumerate(values) if u == v)
        levels.append((v, len(idx)))
        members.append(idx)
    return levels, members


def level_structure(game: Game) -> LevelStructure:
    """Group equal coefficients and equal budgets into descending levels."""
    plevels, pmembers = _group_desc(game.alphas)
    blevels, bmembers = _group_desc(game.budgets)
    return LevelStructure(
        project_levels=tuple(plevels),
        budget_levels=tuple(blevels),
        project_members=tuple(pmembers),
        budget_members=tuple(bmembers),
    )


# ---------------------------------------------------------------------------
# JSON interfaces
# ---------------------------------------------------------------------------


def _load_json(path_or_data):
    if isinstance(path_or_data, dict):
        return path_or_data
    try:
        with open(path_or_data, "r", encoding="utf-8") as fh:
            return json.load(fh)
    except OSError as exc:
        raise ParseError(f"cannot read {path_or_data}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ParseError(f"invalid JSON in {path_or_data}: {exc}") from exc


def load_game(path_or_data) -> Game:
    """Load a game from ``{"theta": .., "budgets": [..], "alphas": [..]}``."""
    data = _load_json(path_or_data)
    if not isinstance(data, dict):
        raise ParseError("game file must contain a JSON object")
    for field in ("theta", "budgets", "alphas"):
        if field not in data:
            raise ParseError(f"game file is missing field '{field}'")
    theta = data["theta"]
    if not isinstance(theta, (int, float)) or isinstance(theta, bool):
        raise ParseError("field 'theta' must be a number")
    for field in ("budgets", "alphas"):
        val = data[field]
        if not isinstance(val, list) or not all(
            isinstance(v, (int, float)) and not isinstance(v, bool) for v in val
        ):
            raise ParseError(f"field '{field}' must be a list of numbers")
    return Game(theta=float(theta), budgets=data["budgets"], alphas=data["alphas"])


def load_profile(path_or_data, game: Game | None = None) -> Profile:
    """Load a profile from ``{"x": [[..], ..]}``; validates against ``game`` if given."""
    data = _load_json(path_or_data)
    if not isinstance(data, dict) or "x" not in data:
        raise ParseError("profile file must be a JSON object with field 'x'")
    x = data["x"]
    if not isinstance(x, list) or not all(isinstance(row, list) for row in x):
        raise ParseError("field 'x' must be a list of rows")
    prof = Profile(np.asarray(x, dtype=float))
    if game is not None:
        game.validate_profile(prof)
    return prof


def dump_game(game: Game) -> dict:
    return {"theta": game.theta, "budgets": list(game.budgets), "alphas": list(game.alphas)}


def dump_profile(profile: Profile) -> dict:
    return {"x": profile.rows()}
