"""Closed-form existence and efficiency predictions with witness profiles.

Each predictor evaluates the conditions of one characterization on the
game's sorted views and, when existence is asserted, constructs the
equilibrium profile the constructive proof prescribes, mapped back to the
caller's player/project order.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, replace

import numpy as np

from .core import Game, LevelStructure, Profile, level_structure, optimal_welfare


class WrongTheta(ValueError):
    """The predictor does not apply at this threshold."""


class WrongArity(ValueError):
    """The predictor does not apply to this number of players."""


class NoNE(ValueError):
    """Efficiency was requested for a prediction without existence."""


class NonpositiveFactor(ValueError):
    """Scaling factors must be positive."""


class Verdict(enum.Enum):
    EXISTS = "Exists"
    NOT_EXISTS = "NotExists"
    EXISTS_NO_SUPPRESSION = "ExistsNoSuppression"
    NO_UNSUPPRESSED_NE = "NoUnsuppressedNE"
    UNKNOWN = "Unknown"


@dataclass(frozen=True)
class Prediction:
    """A theory verdict for one game.

    ``case_id`` names the clause that fired, ``clauses`` every clause that
    holds.  ``witness`` is an equilibrium profile when existence is
    asserted.  ``pos``/``poa`` carry exact efficiency values where the
    theory provides them, ``witness_efficiency`` the witness's own welfare
    ratio, and ``poa_lower_bound`` a smoothness-style lower bound.
    """

    verdict: Verdict
    case_id: str | None = None
    witness: Profile | None = None
    pos: float | None = None
    poa: float | None = None
    poa_lower_bound: float | None = None
    witness_efficiency: float | None = None
    clauses: frozenset[str] = frozenset()


def _witness_from_sorted(game: Game, w_sorted: np.ndarray,
                         pperm: np.ndarray, aperm: np.ndarray) -> Profile:
    """Map a witness built in sorted coordinates back to input order."""
    x = np.zeros((game.n, game.m))
    for si in range(game.n):
        for sj in range(game.m):
            x[pperm[si], aperm[sj]] = w_sorted[si, sj]
    return Profile(x)


def predict_theta0(game: Game) -> Prediction:
    """Zero threshold: a potential game; an NE always exists and is optimal."""
    if game.theta != 0.0:
        raise WrongTheta("predictor applies only at theta = 0")
    steep = int(np.argmax(game.alphas))
    x = np.zeros((game.n, game.m))
    x[:, steep] = game.budgets
    return Prediction(
        verdict=Verdict.EXISTS,
        case_id="theta0",
        witness=Profile(x),
        pos=1.0,
        poa=1.0,
        witness_efficiency=1.0,
        clauses=frozenset({"theta0"}),
    )


def _theta1_conditions(levels: LevelStructure) -> tuple[bool, str | None]:
    l, p = levels.l, levels.p
    if l < p:
        return False, "fewer project levels than budget levels"
    for j in range(p - 1):
        b_j, s_j = levels.budget_levels[j]
        b_next = levels.budget_levels[j + 1][0]
        r_j = levels.project_levels[j][1]
        single_ok = s_j == 1 and b_j > r_j * b_next
        many_ok = s_j >= r_j
        if not (single_ok or many_ok):
            return False, f"budget level {j} cannot cover its {r_j} projects"
    for j in range(p - 1):
        a_j = levels.project_levels[j][0]
        for d in range(j + 1, p):
            a_d, _ = levels.project_levels[d]
            s_d = levels.budget_levels[d][1]
            r_d = levels.project_levels[d][1]
            if a_j < (1 + math.ceil(s_d / r_d)) * a_d:
                return False, (
                    f"coefficient gap between levels {j} and {d} too small"
                )
    return True, None


def _theta1_witness(game: Game, levels: LevelStructure) -> Profile:
    x = np.zeros((game.n, game.m))
    for q in range(levels.p):
        players = levels.budget_members[q]
        projects = levels.project_members[q]
        r_q = len(projects)
        if len(players) == 1:
            i = players[0]
            for w in projects:
                x[i, w] = game.budgets[i] / r_q
        else:
            # Unsplit budgets, dealt round-robin so every level-q project is
            # covered and none exceeds ceil(s_q / r_q) contributors.
            for t, i in enumerate(players):
                x[i, projects[t % r_q]] = game.budgets[i]
    return Profile(x)


def predict_theta1(game: Game) -> Prediction:
    """Threshold one: characterize equilibria in which nobody is suppressed."""
    if game.theta != 1.0:
        raise WrongTheta("predictor applies only at theta = 1")
    levels = level_structure(game)
    ok, why = _theta1_conditions(levels)
    if not ok:
        return Prediction(verdict=Verdict.NO_UNSUPPRESSED_NE, case_id=f"theta1:{why}")
    witness = _theta1_witness(game, levels)
    welfare = sum(
        levels.project_levels[q][0] * sum(game.budgets[i] for i in levels.budget_members[q])
        for q in range(levels.p)
    )
    return Prediction(
        verdict=Verdict.EXISTS_NO_SUPPRESSION,
        case_id="theta1",
        witness=witness,
        witness_efficiency=welfare / optimal_welfare(game),
        clauses=frozenset({"theta1"}),
    )


@dataclass(frozen=True)
class _TwoPlayerView:
    theta: float
    b1: float
    b2: float
    asc: np.ndarray          # coefficients ascending
    k: int
    pperm: np.ndarray
    aperm: np.ndarray

    @property
    def m(self) -> int:
        return len(self.asc)

    @property
    def am(self) -> float:
        return float(self.asc[-1])

    @property
    def a_mk(self) -> float | None:
        """Largest non-steep coefficient, if any."""
        return float(self.asc[self.m - self.k - 1]) if self.k < self.m else None

    @property
    def a_mk1(self) -> float | None:
        return float(self.asc[self.m - self.k - 2]) if self.k + 1 < self.m else None

    @property
    def unique_2steep(self) -> bool:
        if self.k >= self.m:
            return False
        if self.m - self.k == 1:
            return True
        return bool(self.asc[self.m - self.k - 2] < self.asc[self.m - self.k - 1])


def _two_player_view(game: Game) -> _TwoPlayerView:
    pperm, bsort = game.sorted_budget_view()
    aperm, asort = game.sorted_alpha_view()
    am = asort[-1]
    k = int(np.sum(asort == am))
    return _TwoPlayerView(
        theta=game.theta, b1=float(bsort[0]), b2=float(bsort[1]),
        asc=asort, k=k, pperm=pperm, aperm=aperm,
    )


def _two_player_clauses(v: _TwoPlayerView) -> frozenset[str]:
    theta, b1, b2, k, m = v.theta, v.b1, v.b2, v.k, v.m
    held = set()
    cond_alpha1 = v.a_mk is None or 0.5 * v.am >= v.a_mk
    if b1 >= theta * b2 and cond_alpha1 and b1 >= k * theta * b2:
        held.add("1")
    if v.a_mk is not None:
        ratio = v.a_mk / v.am
        if b1 < theta * b2 / k and ratio <= min(1.0 / (1.0 + theta),
                                                2.0 * theta / (1.0 + theta)):
            held.add("2a")
        cond_next = v.a_mk1 is None or v.a_mk >= 2.0 * v.a_mk1
        if (b1 < theta * b2 / (k + theta ** 2)
                and cond_next
                and 2.0 * theta / (1.0 + theta) <= ratio <= 2.0 * (1.0 - theta) / (2.0 - theta)
                and v.unique_2steep):
            held.add("2b")
    if b1 < theta * b2 / m and v.am == v.asc[0]:
        held.add("2c")
    return frozenset(held)


def _two_player_witness(game: Game, v: _TwoPlayerView, clause: str) -> Profile:
    n, m, k = 2, v.m, v.k
    w = np.zeros((n, m))
    steep = range(m - k, m)
    if clause == "1":
        for j in steep:
            w[0, j] = v.b1 / k
            w[1, j] = v.b2 / k
    elif clause == "2a":
        w[0, m - k - 1] = v.b1
        for j in steep:
            w[1, j] = v.b2 / k
    elif clause == "2b":
        w[0, m - k - 1] = v.b1
        w[1, m - k - 1] = v.theta * v.b1
        for j in steep:
            w[1, j] = (v.b2 - v.theta * v.b1) / k
    elif clause == "2c":
        w[1, :] = v.b2 / m
        w[0, m - 1] = v.b1
    else:
        raise ValueError(f"no witness for clause {clause!r}")
    return _witness_from_sorted(game, w, v.pperm, v.aperm)


def predict_two_player(game: Game) -> Prediction:
    """Complete 2-player existence characterization for 0 < theta < 1.

    Clause 1 covers close budgets (everyone splits over the steep
    projects); clauses 2a/2b place the small player on the best non-steep
    project with or without the big player joining at the threshold;
    clause 2c is full domination, possible only with equal coefficients.
    A missing coefficient makes its condition vacuously true, except that
    with every project steep the small player has no non-steep project to
    retreat to, so only clauses 1 and 2c can apply.
    """
    if game.n != 2:
        raise WrongArity("two-player predictor needs exactly two players")
    if not 0.0 < game.theta < 1.0:
        raise WrongTheta("two-player predictor applies for 0 < theta < 1")
    v = _two_player_view(game)
    clauses = _two_player_clauses(v)
    for clause in ("1", "2a", "2b", "2c"):
        if clause in clauses:
            return Prediction(
                verdict=Verdict.EXISTS,
                case_id=clause,
                witness=_two_player_witness(game, v, clause),
                clauses=clauses,
            )
    return Prediction(verdict=Verdict.NOT_EXISTS, case_id="none", clauses=clauses)


def efficiency_two_player(game: Game, prediction: Prediction) -> Prediction:
    """Fill in the exact 2-player pos/poa for an existence prediction."""
    if prediction.verdict is not Verdict.EXISTS:
        raise NoNE("efficiency values require an existence verdict")
    if game.n != 2:
        raise WrongArity("two-player efficiency needs exactly two players")
    v = _two_player_view(game)
    clauses = prediction.clauses
    am, b1, b2, theta = v.am, v.b1, v.b2, v.theta
    denom = am * (b1 + b2)

    def stability_far() -> float:
        return (am * b2 + v.a_mk * b1) / denom

    def anarchy_far() -> float:
        return (am * (b2 - theta * b1) + v.a_mk * b1 * (1.0 + theta)) / denom

    case = prediction.case_id
    if case == "1":
        pos = poa = 1.0
    elif case == "2a":
        pos = stability_far()
        poa = anarchy_far() if "2b" in clauses else pos
    elif case == "2b":
        poa = anarchy_far()
        pos = stability_far() if "2a" in clauses else poa
    elif case == "2c":
        pos = 1.0
        poa = b2 / (b1 + b2)
    else:
        raise NoNE(f"no efficiency formula for case {case!r}")
    return replace(prediction, pos=pos, poa=poa)


def tight_bound(k: int, theta: float) -> float:
    """Infimum of 2-player pos and poa over all cases with k steep projects."""
    if k < 1:
        raise ValueError("k must be >= 1")
    if not 0.0 < theta < 1.0:
        raise WrongTheta("the bound is stated for 0 < theta < 1")
    return k / (k + theta)


def predict_n_player_sufficient(game: Game) -> Prediction:
    """Sufficient existence conditions for n >= 2 players, 0 < theta < 1.

    Either budgets are close and the steep projects dominate enough that
    everyone splits over them, or the largest budget dominates everyone on
    every project of an all-equal game.  Neither condition holding leaves
    existence undecided.
    """
    if game.n < 2:
        raise WrongArity("needs at least two players")
    if not 0.0 < game.theta < 1.0:
        raise WrongTheta("applies for 0 < theta < 1")
    pperm, bsort = game.sorted_budget_view()
    aperm, asort = game.sorted_alpha_view()
    n, m, theta = game.n, game.m, game.theta
    am = asort[-1]
    k = int(np.sum(asort == am))
    a_mk = float(asort[m - k - 1]) if k < m else None

    cond_alpha = a_mk is None or am / n >= a_mk
    if bsort[-2] >= theta * bsort[-1] and cond_alpha and bsort[0] >= k * theta * bsort[-1]:
        w = np.zeros((n, m))
        for si in range(n):
            for j in range(m - k, m):
                w[si, j] = bsort[si] / k
        return Prediction(
            verdict=Verdict.EXISTS,
            case_id="n1",
            witness=_witness_from_sorted(game, w, pperm, aperm),
            clauses=frozenset({"n1"}),
        )
    if bsort[-2] < theta * bsort[-1] / m and am == asort[0]:
        w = np.zeros((n, m))
        w[n - 1, :] = bsort[-1] / m
        for si in range(n - 1):
            w[si, m - 1] = bsort[si]
        return Prediction(
            verdict=Verdict.EXISTS,
            case_id="n2",
            witness=_witness_from_sorted(game, w, pperm, aperm),
            clauses=frozenset({"n2"}),
        )
    return Prediction(verdict=Verdict.UNKNOWN, case_id="none")


def poa_lower_bound_smooth(game: Game) -> float:
    """Best available lower bound on the price of anarchy.

    Combines the smoothness bound (with l the first sorted-budget index
    within a theta factor of the largest), its simpler corollary, and the
    n-player efficiency bounds whose preconditions hold.
    """
    if game.n < 2:
        raise WrongArity("the bounds are stated for n >= 2")
    _, bsort = game.sorted_budget_view()
    _, asort = game.sorted_alpha_view()
    n, theta = game.n, game.theta
    total = float(bsort.sum())
    bn = float(bsort[-1])
    l = next(i for i in range(n) if bsort[i] >= theta * bn) + 1  # 1-based

    smooth = ((1.0 + (n - 1) * theta) / n * float(bsort[l - 1:n - 1].sum()) / total
              + (1.0 + (n - l) * theta) / (n - l + 1) * bn / total)
    corollary = theta * float(bsort[l - 1:].sum()) / total
    bounds = [smooth, corollary]

    am = asort[-1]
    k = int(np.sum(asort == am))
    a_mk = float(asort[game.m - k - 1]) if k < game.m else None
    close = (bsort[-2] >= theta * bn
             and (a_mk is None or am / n >= a_mk)
             and bsort[0] >= k * theta * bn)
    if close:
        bounds.append((1.0 + (n - 1) * theta) * float(bsort[-2] + bn) / (n * total))
    if bsort[-2] < theta * bn:
        bounds.append(bn / total)
    return max(bounds)


def scale_projects(game: Game, p: float) -> Game:
    """Multiply every project coefficient by p; equilibria are unchanged."""
    if p <= 0:
        raise NonpositiveFactor("scaling factor must be positive")
    return Game(
        theta=game.theta,
        budgets=game.budgets,
        alphas=tuple(p * a for a in game.alphas),
        membership_tol=game.membership_tol,
        budget_tol=game.budget_tol,
    )


def scale_budgets_profile(game: Game, profile: Profile, p: float) -> tuple[Game, Profile]:
    """Multiply budgets and the profile by p; p*x is an NE iff x was."""
    if p <= 0:
        raise NonpositiveFactor("scaling factor must be positive")
    scaled = Game(
        theta=game.theta,
        budgets=tuple(p * b for b in game.budgets),
        alphas=game.alphas,
        membership_tol=game.membership_tol,
        budget_tol=game.budget_tol,
    )
    return scaled, Profile(p * profile.x)
