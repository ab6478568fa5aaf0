"""Fictitious play over the continuous budget simplices.

Each player repeatedly best responds to the running average of the other
players' strategies; the average is updated with a configurable weight
(weight 1 is the classic everything-counts-equally average, weight 0 is
pure best-response dynamics).  A run stops when the averaged profile
passes the equilibrium test or the iteration budget is exhausted; restarts
draw independent initial beliefs and are individually seeded, so results
are reproducible and order-independent.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import TextIO

import numpy as np

from .core import EPS_NE, Game, Profile
from .bestresponse import _TwoProjectContext, _grid_utilities, _scan_2p, best_response_grid
from .equilibrium import efficiency


class NoBestResponseError(RuntimeError):
    """Some player's best response is unattained; the attempt is dropped."""

    def __init__(self, player: int):
        super().__init__(f"player {player} has no attained best response")
        self.player = player


@dataclass(frozen=True)
class BeliefState:
    """Per-player averaged strategies plus the step counter."""

    avg: Profile
    t: int = 1
    alpha_weight: float = 1.0

    def __post_init__(self) -> None:
        if self.t < 1:
            raise ValueError("step counter starts at 1")
        if self.alpha_weight < 0:
            raise ValueError("averaging weight must be nonnegative")


@dataclass(frozen=True)
class IsfpConfig:
    max_iterations: int = 50
    restarts: int = 45
    alpha_weight: float = 1.0
    seed: int = 0
    eps_ne: float = EPS_NE
    grid_resolution: int = 400
    stop_at_first: bool = True


@dataclass(frozen=True)
class RestartRecord:
    restart: int
    converged: bool
    iterations: int
    efficiency: float | None = None
    dropped: str | None = None


@dataclass(frozen=True)
class IsfpResult:
    converged: bool
    profile: Profile | None
    iterations: int | None
    efficiency: float | None
    restart_index: int | None
    restarts: tuple[RestartRecord, ...]


def _tie_break_2p(point_max, interval_max, b: float, cur0: float, cur1: float) -> float:
    """Pick the maximizing split closest (sup-norm) to the current average."""

    def dist(t: float) -> float:
        return max(abs(t - cur0), abs(b - t - cur1))

    best_t, best_d = None, None
    for t in point_max:
        d = dist(t)
        if best_d is None or d < best_d:
            best_t, best_d = t, d
    for lo, hi, lo_closed, hi_closed in interval_max:
        # An open endpoint does not attain the sup; back off into the
        # interior, where the utility is exactly constant.
        inset = (hi - lo) * 1e-9
        lo_ok = lo if lo_closed else lo + inset
        hi_ok = hi if hi_closed else hi - inset
        # dist is convex piecewise-linear in t; its minimum over the
        # feasible stretch is at an endpoint, a kink, or the branch crossing.
        for t in (lo_ok, hi_ok,
                  min(max(cur0, lo_ok), hi_ok),
                  min(max(b - cur1, lo_ok), hi_ok),
                  min(max((cur0 + b - cur1) / 2.0, lo_ok), hi_ok)):
            d = dist(t)
            if best_d is None or d < best_d:
                best_t, best_d = t, d
    return best_t


def _respond_2p(game: Game, rows: list[list[float]]):
    """(sup, utility, chosen full-budget action) per player; action None if unattained."""
    theta, eps, n = game.theta, game.membership_tol, game.n
    a0, a1 = game.alphas
    out = []
    for i in range(n):
        col0 = [rows[j][0] for j in range(n) if j != i]
        col1 = [rows[j][1] for j in range(n) if j != i]
        ctx = _TwoProjectContext.from_columns(
            theta, eps, n, game.budgets[i], a0, a1, col0, col1)
        sup, attained, point_max, interval_max, _ = _scan_2p(ctx)
        cur0, cur1 = rows[i][0], rows[i][1]
        u = ctx.utility_at(cur0)
        if not attained:
            out.append((sup, u, None, i))
            continue
        t = _tie_break_2p(point_max, interval_max, ctx.b, cur0, cur1)
        out.append((sup, u, (t, ctx.b - t), i))
    return out


def _respond_grid(game: Game, rows: list[list[float]], resolution: int):
    avg = np.asarray(rows)
    out = []
    for i in range(game.n):
        opp = np.delete(avg, i, axis=0)
        u = float(_grid_utilities(game, opp, avg[i][None, :])[0])
        result = best_response_grid(game, avg, i, resolution)
        actions = [np.asarray(mx.lo) for mx in result.maximizers]
        dists = [float(np.max(np.abs(a - avg[i]))) for a in actions]
        chosen = actions[int(np.argmin(dists))]
        out.append((result.sup_value, u, tuple(chosen), i))
    return out


def _respond_all(game: Game, rows: list[list[float]], config: IsfpConfig):
    if game.m == 2:
        return _respond_2p(game, rows)
    return _respond_grid(game, rows, config.grid_resolution)


def detect_ne(game: Game, belief: BeliefState, eps_ne: float = EPS_NE) -> bool:
    """True iff every player's averaged strategy is within eps of its best response."""
    rows = belief.avg.x.tolist()
    responses = _respond_all(game, rows, IsfpConfig(eps_ne=eps_ne))
    return all(sup <= u + eps_ne for sup, u, _, _ in responses)


def isfp_step(game: Game, belief: BeliefState, config: IsfpConfig | None = None) -> BeliefState:
    """One synchronous update: everyone best responds to the current averages.

    Tied best responses resolve to the action closest to the player's own
    averaged strategy (sup-norm), snapping into constant intervals.
    Raises ``NoBestResponseError`` when some player's supremum is
    unattained.
    """
    config = config or IsfpConfig(alpha_weight=belief.alpha_weight)
    rows = belief.avg.x.tolist()
    responses = _respond_all(game, rows, config)
    for sup, u, action, i in responses:
        if action is None:
            raise NoBestResponseError(i)
    aw, t = belief.alpha_weight, belief.t
    _update_rows(rows, responses, aw, t)
    return BeliefState(avg=Profile(np.asarray(rows)), t=t + 1,
                       alpha_weight=belief.alpha_weight)


def _update_rows(rows, responses, alpha_weight: float, t: int) -> None:
    denom = alpha_weight * t + 1.0
    scale = alpha_weight * t
    for sup, u, action, i in responses:
        row = rows[i]
        rows[i] = [(scale * row[w] + action[w]) / denom for w in range(len(row))]


def _initial_rows(game: Game, rng: np.random.Generator) -> list[list[float]]:
    # Full-budget points drawn uniformly on each player's simplex face.
    return [
        list(rng.dirichlet(np.ones(game.m)) * game.budgets[i])
        for i in range(game.n)
    ]


def _write_trace(trace: TextIO, restart: int, iteration: int,
                 rows: list[list[float]]) -> None:
    for i, row in enumerate(rows):
        for w, value in enumerate(row):
            trace.write(f"{restart},{iteration},{i},{w},{value!r}\n")


def run_isfp(game: Game, config: IsfpConfig | None = None,
             trace: TextIO | None = None) -> IsfpResult:
    """Run restarted fictitious play and report the first certified NE.

    Each restart draws an independent initial belief from its own seed
    stream, iterates at most ``max_iterations`` steps, and stops early
    when the averaged profile passes the equilibrium test at ``eps_ne``.
    Restarts whose best response is unattained at some step are dropped.
    """
    config = config or IsfpConfig()
    if trace is not None:
        trace.write("restart,iteration,player,project,avg\n")
    records: list[RestartRecord] = []
    first: tuple[int, Profile, int] | None = None
    for restart in range(config.restarts):
        rng = np.random.default_rng([config.seed, restart])
        avg = _initial_rows(game, rng)
        t = 1
        dropped = None
        converged_at = None
        if trace is not None:
            _write_trace(trace, restart, 0, avg)
        for iteration in range(config.max_iterations + 1):
            responses = _respond_all(game, avg, config)
            if all(sup <= u + config.eps_ne for sup, u, _, _ in responses):
                converged_at = iteration
                break
            if iteration == config.max_iterations:
                break
            if any(action is None for _, _, action, _ in responses):
                dropped = next(
                    f"no best response for player {i}"
                    for _, _, action, i in responses if action is None
                )
                break
            _update_rows(avg, responses, config.alpha_weight, t)
            t += 1
            if trace is not None:
                _write_trace(trace, restart, iteration + 1, avg)
        if converged_at is not None:
            prof = Profile(np.asarray(avg))
            records.append(RestartRecord(
                restart=restart, converged=True, iterations=converged_at,
                efficiency=efficiency(game, prof),
            ))
            if first is None:
                first = (restart, prof, converged_at)
                if config.stop_at_first:
                    break
        else:
            records.append(RestartRecord(
                restart=restart, converged=False,
                iterations=config.max_iterations, dropped=dropped,
            ))
    if first is None:
        return IsfpResult(converged=False, profile=None, iterations=None,
                          efficiency=None, restart_index=None,
                          restarts=tuple(records))
    restart, prof, iters = first
    return IsfpResult(
        converged=True,
        profile=prof,
        iterations=iters,
        efficiency=efficiency(game, prof),
        restart_index=restart,
        restarts=tuple(records),
    )
