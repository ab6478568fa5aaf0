"""Equilibrium verification and profile efficiency.

``verify_ne`` checks that no player can gain more than a tolerance by
unilateral deviation, either exactly (two projects, via the breakpoint
scan) or against a brute-force grid.  ``verify_cyclically_strong``
additionally rules out whole-budget cyclic rotations among players whose
entire budget sits in a single project.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass

import numpy as np

from .core import EPS_NE, Game, Profile, evaluate, optimal_welfare, social_welfare
from .bestresponse import (
    BestResponseResult,
    best_response_2p,
    best_response_grid,
)

# Factorial growth: rotation cycles are only enumerated up to this many
# whole-budget players.
MAX_CYCLE_PLAYERS = 8


class ExactModeUnavailable(ValueError):
    """Exact verification requested for a game that is not 2-project."""


class NotAnNE(ValueError):
    """A cyclically-strong check was asked for a profile that is not an NE."""


class DegenerateGame(ValueError):
    """Efficiency is undefined when the optimal welfare is not positive."""


@dataclass(frozen=True)
class Deviation:
    """A concrete profitable unilateral move: who, to what action, gaining what."""

    player: int
    action: tuple[float, ...]
    gain: float


@dataclass(frozen=True)
class NEVerdict:
    """Outcome of an equilibrium check.

    ``certificate`` records the strength of the claim: "exact" verdicts
    are sound and complete for two projects, "grid" verdicts only certify
    that no grid deviation was found.
    """

    is_ne: bool
    certificate: str
    deviation: Deviation | None = None

    def __bool__(self) -> bool:
        return self.is_ne


def _best_response(game: Game, profile: Profile, i: int, mode: str,
                   resolution: int) -> BestResponseResult:
    if mode == "exact":
        return best_response_2p(game, profile, i)
    return best_response_grid(game, profile, i, resolution)


def _probe_near_limit(game: Game, profile: Profile, i: int,
                      result: BestResponseResult, current: float) -> Deviation | None:
    """Find a concrete improving action near an unattained supremum."""
    from .bestresponse import _TwoProjectContext

    t_w, side = result.limit_witness
    ctx = _TwoProjectContext(game, profile, i, psi=0)
    b = game.budgets[i]
    step = b * 1e-3
    for _ in range(12):
        t = t_w + step if side == "right" else t_w - step
        t = min(max(t, 0.0), b)
        gain = ctx.utility_at(t) - current
        if gain > EPS_NE:
            return Deviation(player=i, action=(t, b - t), gain=gain)
        step /= 8.0
    return None


def verify_ne(game: Game, profile: Profile, mode: str = "exact",
              resolution: int = 1000, eps_ne: float = EPS_NE) -> NEVerdict:
    """Check whether ``profile`` is a (pure) Nash equilibrium.

    mode "exact" requires two projects and compares each player's utility
    with its exact best-response supremum; mode "grid" compares with the
    best grid action at the given resolution and is a one-sided check.
    """
    if mode not in ("exact", "grid"):
        raise ValueError(f"unknown mode {mode!r}")
    if mode == "exact" and game.m != 2:
        raise ExactModeUnavailable("exact verification needs a 2-project game")
    utilities = evaluate(game, profile).utilities
    for i in range(game.n):
        result = _best_response(game, profile, i, mode, resolution)
        gap = result.sup_value - utilities[i]
        if gap <= eps_ne:
            continue
        deviation = None
        if result.attained and result.maximizers:
            action = result.maximizers[0].representative
            deviation = Deviation(player=i, action=tuple(action), gain=float(gap))
        elif result.limit_witness is not None:
            deviation = _probe_near_limit(game, profile, i, result, utilities[i])
        if deviation is None:
            deviation = Deviation(player=i, action=(), gain=float(gap))
        return NEVerdict(is_ne=False, certificate=mode, deviation=deviation)
    return NEVerdict(is_ne=True, certificate=mode)


@dataclass(frozen=True)
class CycleVerdict:
    """Outcome of the cyclic-rotation check.

    ``status`` is "strong", "violated" (then ``cycle`` names the deviating
    players in rotation order) or "unknown" (enumeration capped).
    """

    status: str
    cycle: tuple[int, ...] | None = None
    reason: str | None = None

    def __bool__(self) -> bool:
        return self.status == "strong"


def whole_budget_players(game: Game, profile: Profile,
                         tol: float = 1e-9) -> dict[int, int]:
    """Players whose entire budget sits in one project, mapped to that project."""
    out: dict[int, int] = {}
    for i in range(game.n):
        row = profile.x[i]
        w = int(np.argmax(row))
        if row[w] >= game.budgets[i] - tol and row.sum() - row[w] <= tol:
            out[i] = w
    return out


def _rotation_profile(game: Game, profile: Profile, cycle: tuple[int, ...],
                      projects: dict[int, int]) -> Profile:
    x = np.array(profile.x, copy=True)
    for pos, i in enumerate(cycle):
        target = projects[cycle[(pos + 1) % len(cycle)]]
        x[i, :] = 0.0
        x[i, target] = game.budgets[i]
    return Profile(x)


def verify_cyclically_strong(game: Game, profile: Profile, mode: str = "exact",
                             resolution: int = 1000,
                             eps_ne: float = EPS_NE) -> CycleVerdict:
    """Check the cyclic-rotation refinement of an equilibrium.

    The profile must already be an NE (checked; ``NotAnNE`` otherwise).
    Every simple cycle over whole-budget players is rotated: each deviator
    sends its full budget to the next player's project.  A cycle violates
    the refinement when no deviator loses and at least one strictly gains.
    Cycles where some deviator would stay on its own project are not
    meaningful rotations and are skipped.
    """
    ne = verify_ne(game, profile, mode=mode, resolution=resolution, eps_ne=eps_ne)
    if not ne.is_ne:
        raise NotAnNE("cyclically-strong check requires a Nash equilibrium")
    projects = whole_budget_players(game, profile)
    players = sorted(projects)
    if len(players) > MAX_CYCLE_PLAYERS:
        return CycleVerdict(
            status="unknown",
            reason=f"{len(players)} whole-budget players exceed the cycle cap "
                   f"of {MAX_CYCLE_PLAYERS}",
        )
    base = evaluate(game, profile).utilities
    for size in range(2, len(players) + 1):
        for subset in itertools.combinations(players, size):
            first = subset[0]
            for rest in itertools.permutations(subset[1:]):
                cycle = (first,) + rest
                if any(projects[i] == projects[cycle[(pos + 1) % size]]
                       for pos, i in enumerate(cycle)):
                    continue
                rotated = _rotation_profile(game, profile, cycle, projects)
                utils = evaluate(game, rotated).utilities
                gains = [utils[i] - base[i] for i in cycle]
                if all(g >= -eps_ne for g in gains) and any(g > eps_ne for g in gains):
                    return CycleVerdict(status="violated", cycle=cycle)
    return CycleVerdict(status="strong")


def efficiency(game: Game, profile: Profile) -> float:
    """Welfare of the profile divided by the optimal welfare; lies in [0, 1]."""
    opt = optimal_welfare(game)
    if opt <= 0.0:
        raise DegenerateGame("optimal welfare is not positive")
    return social_welfare(game, profile) / opt
