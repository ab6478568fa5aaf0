"""Best response computation.

For two projects a player's response is a 1-D budget split, and its
utility is linear between finitely many candidate discontinuities: the
point where the player itself reaches a project's threshold, and the
points where an opponent drops below it.  Scanning interval midpoints and
one-sided limits at those points yields the exact utility supremum and
whether it is attained.  For any number of projects a brute-force simplex
grid serves as a (lower-bounding) oracle, and a subset-sum instance
builder produces games on which best responding encodes that problem.
"""

from __future__ import annotations

import itertools
from bisect import bisect_left
from dataclasses import dataclass
from math import comb, sqrt
from typing import Sequence

import numpy as np

from .core import Game, Profile, evaluate

# Candidate breakpoints closer than this are merged.
EPS_DEDUPE = 1e-12

# Relative tolerance for "this point achieves the supremum".
EPS_ATTAIN = 1e-9

# Hard cap on grid candidates per best-response call.
GRID_CANDIDATE_CAP = 10_000_000


class GridTooLarge(ValueError):
    """The requested grid would exceed the candidate cap."""


@dataclass(frozen=True)
class Breakpoints:
    """Candidate discontinuity points of a 2-project budget split.

    ``L`` is sorted, starts at 0 and ends at the player's budget.  ``M``
    is ``L`` plus one midpoint per consecutive pair, so ``len(M) ==
    2 * len(L) - 1``.
    """

    L: tuple[float, ...]
    M: tuple[float, ...]

    def __post_init__(self) -> None:
        if len(self.L) < 2 or any(b <= a for a, b in zip(self.L, self.L[1:])):
            raise ValueError("L must be strictly increasing with at least two points")
        if len(self.M) != 2 * len(self.L) - 1:
            raise ValueError("M must add exactly one midpoint per interval")


@dataclass(frozen=True)
class Maximizer:
    """One argmax: a point (lo == hi) or a constant interval of actions.

    An interval endpoint may fail to attain the supremum (the sharer
    structure can jump exactly there); ``lo_closed``/``hi_closed`` record
    whether each endpoint itself achieves it.  The representative point is
    always attained.
    """

    lo: tuple[float, ...]
    hi: tuple[float, ...]
    is_interval: bool
    lo_closed: bool = True
    hi_closed: bool = True

    @property
    def representative(self) -> tuple[float, ...]:
        return tuple((a + b) / 2.0 for a, b in zip(self.lo, self.hi))


@dataclass(frozen=True)
class BestResponseResult:
    """Utility supremum of one player's responses.

    ``attained`` iff some feasible action reaches ``sup_value``; then
    ``maximizers`` lists every argmax (points and constant intervals).
    When unattained, ``limit_witness`` gives the budget split toward which
    the supremum is approached and from which side ("left"/"right"), in
    the contribution-to-project-0 parametrization.  ``exact`` is False for
    grid approximations, whose value only lower-bounds the supremum.
    """

    sup_value: float
    attained: bool
    maximizers: tuple[Maximizer, ...]
    limit_witness: tuple[float, str] | None = None
    exact: bool = True


def _opponent_rows(profile: Profile | np.ndarray, i: int) -> np.ndarray:
    x = profile.x if isinstance(profile, Profile) else np.asarray(profile, dtype=float)
    return np.delete(x, i, axis=0)


class _TwoProjectContext:
    """Opponent summary for player i in a 2-project game, t = bid on project ``psi``."""

    __slots__ = ("theta", "eps", "b", "a_psi", "a_om", "n_all",
                 "sum_psi", "sum_om", "max_psi", "max_om", "pos_psi", "pos_om")

    def __init__(self, game: Game, opponents: Profile | np.ndarray, i: int, psi: int):
        if game.m != 2:
            raise ValueError("exact best response requires exactly two projects")
        om = 1 - psi
        x = opponents.x if isinstance(opponents, Profile) else np.asarray(opponents, float)
        col_psi = [float(x[j, psi]) for j in range(x.shape[0]) if j != i]
        col_om = [float(x[j, om]) for j in range(x.shape[0]) if j != i]
        self._setup(game.theta, game.membership_tol, game.n, game.budgets[i],
                    game.alphas[psi], game.alphas[om], col_psi, col_om)

    @classmethod
    def from_columns(cls, theta: float, eps: float, n_all: int, b: float,
                     a_psi: float, a_om: float,
                     col_psi: list[float], col_om: list[float]) -> "_TwoProjectContext":
        """Allocation-light constructor for hot loops; columns exclude the player."""
        obj = cls.__new__(cls)
        obj._setup(theta, eps, n_all, b, a_psi, a_om, col_psi, col_om)
        return obj

    def _setup(self, theta, eps, n_all, b, a_psi, a_om, col_psi, col_om) -> None:
        self.theta = theta
        self.eps = eps
        self.b = b
        self.a_psi = a_psi
        self.a_om = a_om
        self.n_all = n_all
        self.sum_psi = sum(col_psi)
        self.sum_om = sum(col_om)
        self.max_psi = max(col_psi) if col_psi else 0.0
        self.max_om = max(col_om) if col_om else 0.0
        self.pos_psi = sorted(v for v in col_psi if v > 0.0)
        self.pos_om = sorted(v for v in col_om if v > 0.0)

    def _project_share(self, own: float, a: float, s: float, mx: float,
                       pos: list[float]) -> tuple[float, float]:
        """(slope, intercept) of the player's share from one project.

        ``own`` is the player's bid; while the sharer structure stays
        fixed the share is linear in it, with these coefficients.
        """
        theta = self.theta
        top = own if own > mx else mx
        if top <= 0.0 and own <= 0.0:
            return 0.0, 0.0
        if theta == 0.0:
            # Everyone shares a non-vacant project.
            if own <= 0.0 and s <= 0.0:
                return 0.0, 0.0
            count = self.n_all
            return a / count, a * s / count
        cut = theta * top - self.eps
        if own <= 0.0 or own < cut:
            return 0.0, 0.0
        count = 1 + len(pos) - bisect_left(pos, cut)
        return a / count, a * s / count

    def utility_at(self, t: float) -> float:
        """Exact utility of the full-budget split (t, b - t)."""
        s0, i0 = self._project_share(t, self.a_psi, self.sum_psi, self.max_psi,
                                     self.pos_psi)
        rem = self.b - t
        s1, i1 = self._project_share(rem, self.a_om, self.sum_om,
                                     self.max_om, self.pos_om)
        return s0 * t + i0 + s1 * rem + i1

    def linear_coeffs(self, t_probe: float) -> tuple[float, float]:
        """(slope, intercept) of u(t) on the open interval containing ``t_probe``."""
        s0, i0 = self._project_share(t_probe, self.a_psi, self.sum_psi,
                                     self.max_psi, self.pos_psi)
        s1, i1 = self._project_share(self.b - t_probe, self.a_om, self.sum_om,
                                     self.max_om, self.pos_om)
        # u(t) = s0*t + i0 + s1*(b - t) + i1
        return s0 - s1, i0 + i1 + s1 * self.b


def _breakpoint_list(ctx: _TwoProjectContext) -> list[float]:
    theta, b = ctx.theta, ctx.b
    pts = [0.0, b]
    if theta > 0.0:
        pts.append(theta * ctx.max_psi)          # own threshold on psi
        pts.append(b - theta * ctx.max_om)       # own threshold on the other project
        for v in ctx.pos_psi:                    # opponents suppressed on psi
            pts.append(v / theta)
        for v in ctx.pos_om:                     # opponents suppressed on the other
            pts.append(b - v / theta)
    pts = [p for p in pts if -EPS_DEDUPE <= p <= b + EPS_DEDUPE]
    pts.sort()
    merged: list[float] = []
    for p in pts:
        p = min(max(p, 0.0), b)
        if not merged or p - merged[-1] > EPS_DEDUPE:
            merged.append(p)
    if len(merged) == 1:  # degenerate budget; cannot happen for positive budgets
        merged.append(b)
    merged[0], merged[-1] = 0.0, b
    return merged


def breakpoints(game: Game, opponents: Profile | np.ndarray, i: int, psi: int = 0) -> Breakpoints:
    """Candidate discontinuities of player i's utility along its budget split."""
    ctx = _TwoProjectContext(game, opponents, i, psi)
    L = _breakpoint_list(ctx)
    M: list[float] = []
    for a, b in zip(L, L[1:]):
        M.append(a)
        M.append((a + b) / 2.0)
    M.append(L[-1])
    return Breakpoints(L=tuple(L), M=tuple(M))


def _scan_2p(ctx: _TwoProjectContext):
    """Core scan.  Returns (sup, attained, point_maximizers, interval_maximizers,
    limit_witness); maximizers are in the t parametrization, intervals as
    (lo, hi, lo_closed, hi_closed)."""
    L = _breakpoint_list(ctx)
    L_vals = [ctx.utility_at(t) for t in L]
    value_at = dict(zip(L, L_vals))
    point_vals: list[tuple[float, float]] = list(zip(L, L_vals))
    intervals: list[tuple[float, float, float, float]] = []  # (a, b, u(a+), u(b-))
    for a, b in zip(L, L[1:]):
        mid = (a + b) / 2.0
        slope, icpt = ctx.linear_coeffs(mid)
        point_vals.append((mid, slope * mid + icpt))
        intervals.append((a, b, slope * a + icpt, slope * b + icpt))

    best_point = max(v for _, v in point_vals)
    best_limit = best_point
    witness: tuple[float, str] | None = None
    for a, b, ua, ub in intervals:
        if ua > best_limit:
            best_limit, witness = ua, (a, "right")
        if ub > best_limit:
            best_limit, witness = ub, (b, "left")
    sup = max(best_point, best_limit)
    tol = EPS_ATTAIN * max(1.0, abs(sup))
    attained = best_point >= sup - tol

    point_max: list[float] = []
    interval_max: list[tuple[float, float, bool, bool]] = []
    if attained:
        for a, b, ua, ub in intervals:
            if abs(ua - ub) <= tol and ua >= sup - tol:
                # Constant at sup on the open interval; an endpoint belongs
                # only if its own point value reaches sup too.
                interval_max.append((
                    a, b,
                    value_at[a] >= sup - tol,
                    value_at[b] >= sup - tol,
                ))
        for t, v in point_vals:
            if v >= sup - tol and not any(
                lo - tol <= t <= hi + tol for lo, hi, _, _ in interval_max
            ):
                point_max.append(t)
        point_max = sorted(set(point_max))
        witness = None
    return sup, attained, point_max, interval_max, witness


def best_response_2p(game: Game, opponents: Profile | np.ndarray, i: int) -> BestResponseResult:
    """Exact best response of player i in a 2-project game.

    The response is parametrized by the contribution t to project 0, with
    budget - t going to project 1 (responding with the full budget is
    without loss of generality: shares are weakly monotone in the own
    bid).  Runs in O(n log n).
    """
    ctx = _TwoProjectContext(game, opponents, i, psi=0)
    sup, attained, point_max, interval_max, witness = _scan_2p(ctx)
    b = ctx.b
    maxims = [Maximizer(lo=(t, b - t), hi=(t, b - t), is_interval=False) for t in point_max]
    maxims += [
        Maximizer(lo=(lo, b - lo), hi=(hi, b - hi), is_interval=True,
                  lo_closed=lc, hi_closed=hc)
        for lo, hi, lc, hc in interval_max
    ]
    return BestResponseResult(
        sup_value=sup,
        attained=attained,
        maximizers=tuple(maxims),
        limit_witness=witness,
        exact=True,
    )


# ---------------------------------------------------------------------------
# Grid oracle
# ---------------------------------------------------------------------------


def _grid_utilities(game: Game, opp: np.ndarray, candidates: np.ndarray) -> np.ndarray:
    """Utilities of a batch of candidate actions against fixed opponents."""
    theta, eps = game.theta, game.membership_tol
    alphas = np.asarray(game.alphas)
    opp_total = opp.sum(axis=0) if opp.size else np.zeros(game.m)
    opp_max = opp.max(axis=0) if opp.size else np.zeros(game.m)
    totals = candidates + opp_total
    top = np.maximum(candidates, opp_max)
    vacant = totals <= 0.0
    if theta == 0.0:
        count = float(game.n)
        own_in = ~vacant
        return np.where(own_in, alphas * totals / count, 0.0).sum(axis=1)
    cut = theta * top - eps
    own_in = (candidates > 0.0) & (candidates >= cut)
    if opp.size:
        opp_in = (opp[None, :, :] > 0.0) & (opp[None, :, :] >= cut[:, None, :])
        counts = opp_in.sum(axis=1) + own_in
    else:
        counts = own_in.astype(int)
    safe = np.maximum(counts, 1)
    return np.where(own_in, alphas * totals / safe, 0.0).sum(axis=1)


def _compositions(total: int, parts: int):
    """All nonnegative integer vectors of length ``parts`` summing to ``total``."""
    for cuts in itertools.combinations(range(total + parts - 1), parts - 1):
        prev = -1
        out = []
        for c in cuts:
            out.append(c - prev - 1)
            prev = c
        out.append(total + parts - 2 - prev)
        yield out


def best_response_grid(
    game: Game,
    opponents: Profile | np.ndarray,
    i: int,
    resolution: int,
    full_budget_only: bool = False,
) -> BestResponseResult:
    """Brute-force best response over a simplex grid of player i's actions.

    The grid has ``resolution`` steps per simplex edge and includes every
    full-budget vertex; with ``full_budget_only`` the slack coordinate is
    dropped and only full-budget splits are enumerated.  For two projects
    the candidate set is augmented with the exact breakpoints, the
    interval midpoints, and near-breakpoint offsets, so the grid value is
    within ``alpha_max * budget / resolution`` of the true supremum.  The
    result is a lower bound on the supremum and is marked ``exact=False``.
    """
    if resolution < 1:
        raise ValueError("resolution must be >= 1")
    opp = _opponent_rows(opponents, i)
    b = game.budgets[i]
    m = game.m
    parts = m if full_budget_only else m + 1
    n_cand = comb(resolution + parts - 1, parts - 1)
    if n_cand > GRID_CANDIDATE_CAP:
        raise GridTooLarge(
            f"{n_cand} candidates exceed the cap of {GRID_CANDIDATE_CAP}"
        )

    if m == 2 and full_budget_only:
        ts = np.linspace(0.0, b, resolution + 1)
        extras = []
        ctx = _TwoProjectContext(game, opponents, i, psi=0)
        L = _breakpoint_list(ctx)
        h = b / resolution
        for lo, hi in zip(L, L[1:]):
            mid = (lo + hi) / 2.0
            extras += [mid, min(lo + h, mid), max(hi - h, mid)]
        ts = np.unique(np.concatenate([ts, np.asarray(L), np.asarray(extras)]))
        candidates = np.column_stack([ts, b - ts])
    else:
        comp = np.array(list(_compositions(resolution, parts)), dtype=float)
        candidates = comp[:, :m] * (b / resolution)
        if m == 2 and game.theta > 0.0:
            ctx = _TwoProjectContext(game, opponents, i, psi=0)
            L = _breakpoint_list(ctx)
            h = b / resolution
            extras = []
            for lo, hi in zip(L, L[1:]):
                mid = (lo + hi) / 2.0
                extras += [mid, min(lo + h, mid), max(hi - h, mid)]
            ts = np.unique(np.asarray(list(L) + extras))
            candidates = np.vstack([candidates, np.column_stack([ts, b - ts])])

    utils = _grid_utilities(game, opp, candidates)
    best = float(utils.max())
    tol = EPS_ATTAIN * max(1.0, abs(best))
    winners = candidates[utils >= best - tol]
    maxims = tuple(
        Maximizer(lo=tuple(row), hi=tuple(row), is_interval=False) for row in winners
    )
    return BestResponseResult(
        sup_value=best, attained=True, maximizers=maxims, limit_witness=None, exact=False
    )


# ---------------------------------------------------------------------------
# Subset-sum reduction
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class SubsetSumReduction:
    """A 2-player game on which best responding solves subset sum.

    ``game`` has one project per item; the opponent's fixed strategy bids
    ``item / theta`` on each project, so the responder must spend at least
    ``item`` there to share.  Coefficients satisfy
    ``alpha * (1 + theta) == 2 * theta``, making a just-cleared project
    worth exactly its item, and ``alpha * cap < min(items)``, so clearing
    another project always beats over-contributing.  The responder's
    optimal cleared set is therefore a maximum subset sum under the cap.

    Budget left over after clearing earns ``alpha / 2`` per unit on a
    cleared project, so the raw supremum is ``S + alpha/2 * (cap - S)``
    for the optimal sum S (equal to S exactly when the cap is met).
    ``recover_optimum`` inverts this affine offset.
    """

    game: Game
    opponents_profile: Profile
    responder: int
    items: tuple[float, ...]
    cap: float

    @property
    def theta(self) -> float:
        return self.game.theta

    @property
    def alpha(self) -> float:
        return self.game.alphas[0]

    def strategy_for_subset(self, subset: Sequence[int]) -> Profile:
        """The responder clears ``subset`` and parks leftover on its first project."""
        x = np.array(self.opponents_profile.x, copy=True)
        row = np.zeros(len(self.items))
        for j in subset:
            row[j] = self.items[j]
        leftover = self.cap - row.sum()
        if leftover < -self.game.budget_tol:
            raise ValueError("subset exceeds the cap")
        if subset and leftover > 0:
            row[subset[0]] += leftover
        x[self.responder] = row
        return Profile(x)

    def solve_best_response(self) -> tuple[float, Profile, tuple[int, ...]]:
        """Exact best response by exhausting cleared subsets.

        Any best response clears some feasible subset and parks the rest
        on a cleared project, so enumerating the 2^q subsets is exact.
        """
        q = len(self.items)
        if q > 24:
            raise ValueError("subset enumeration is limited to 24 items")
        best = (0.0, self.strategy_for_subset(()), ())
        for mask in range(1, 1 << q):
            subset = tuple(j for j in range(q) if mask >> j & 1)
            if sum(self.items[j] for j in subset) > self.cap + self.game.budget_tol:
                continue
            prof = self.strategy_for_subset(subset)
            value = float(evaluate(self.game, prof).utilities[self.responder])
            if value > best[0]:
                best = (value, prof, subset)
        return best

    def recover_optimum(self, br_value: float) -> float:
        """Map a best-response value back to the maximum subset sum."""
        if br_value <= 0.0:
            return 0.0
        a = self.alpha
        return (br_value - a * self.cap / 2.0) / (1.0 - a / 2.0)

    def cleared_sum(self, profile: Profile) -> float:
        """Summed items of the projects the responder clears in ``profile``."""
        row = profile.x[self.responder]
        return float(
            sum(s for s, bid in zip(self.items, row) if bid >= s * (1.0 - 1e-9))
        )


def subset_sum_game(items: Sequence[float], cap: float) -> SubsetSumReduction:
    """Build the reduction instance for the given item sizes and cap.

    Picks ``theta`` with ``theta**2 <= min(items) / cap`` (the responder
    can then never suppress the opponent) and shrinks it until
    ``alpha * cap < min(items)`` with ``alpha = 2 * theta / (1 + theta)``.
    """
    items = tuple(float(s) for s in items)
    if not items or any(s <= 0 for s in items):
        raise ValueError("items must be positive")
    cap = float(cap)
    if cap <= 0:
        raise ValueError("cap must be positive")
    smin = min(items)
    theta = min(0.5, 0.999 * sqrt(smin / cap))
    while 2.0 * theta / (1.0 + theta) * cap >= smin:
        theta /= 2.0
    alpha = 2.0 * theta / (1.0 + theta)
    q = len(items)
    opp_row = [s / theta for s in items]
    game = Game(
        theta=theta,
        budgets=(cap, sum(opp_row)),
        alphas=(alpha,) * q,
    )
    x = np.zeros((2, q))
    x[1] = opp_row
    return SubsetSumReduction(
        game=game,
        opponents_profile=Profile(x),
        responder=0,
        items=items,
        cap=cap,
    )
