"""Command-line front end.

``analyze`` reports everything the library knows about one game file:
level structure, the applicable closed-form predictions with verified
witnesses, the fictitious-play outcome, efficiency, and the
cyclic-rotation verdict for any found equilibrium.  ``sweep`` evaluates a
grid of games over two parameter axes, writes one CSV row per cell, and
renders a pair of grayscale heatmaps (simulation and theory) from the CSV
data.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import os
import sys
from dataclasses import dataclass

import numpy as np

from . import theory
from .core import Game, InvariantViolation, ParseError, load_game, level_structure, optimal_welfare
from .equilibrium import efficiency, verify_cyclically_strong, verify_ne
from .isfp import IsfpConfig, run_isfp
from .theory import Prediction, Verdict

CSV_HEADER = [
    "axis1", "axis2", "theta", "n", "m", "ne_found", "efficiency",
    "iterations", "theory_verdict", "theory_pos", "theory_poa", "seed",
]

AXIS_NAMES = ("alpha_ratio", "budget_ratio", "theta", "n")

# Games need strictly positive coefficients; a requested ratio of zero is
# clamped to this floor.
RATIO_FLOOR = 1e-6

EXISTS_VERDICTS = (Verdict.EXISTS, Verdict.EXISTS_NO_SUPPRESSION)


@dataclass(frozen=True)
class Axis:
    name: str
    lo: float
    hi: float
    steps: int

    def values(self) -> list[float]:
        if self.steps == 1:
            return [self.lo]
        return [float(v) for v in np.linspace(self.lo, self.hi, self.steps)]


@dataclass(frozen=True)
class SweepSpec:
    axis1: Axis
    axis2: Axis
    fixed: dict
    isfp: IsfpConfig


def _parse_axis(data, which: str) -> Axis:
    if not isinstance(data, dict):
        raise ParseError(f"{which} must be an object")
    for fieldname in ("name", "lo", "hi", "steps"):
        if fieldname not in data:
            raise ParseError(f"{which} is missing field '{fieldname}'")
    name = data["name"]
    if name not in AXIS_NAMES:
        raise ParseError(f"{which}.name must be one of {AXIS_NAMES}")
    lo, hi, steps = float(data["lo"]), float(data["hi"]), int(data["steps"])
    if steps < 1:
        raise ParseError(f"{which}.steps must be >= 1")
    if hi < lo:
        raise ParseError(f"{which} range must satisfy lo <= hi")
    if hi <= 0:
        raise ParseError(f"{which} range must be positive")
    if name == "budget_ratio" and hi > 1.0:
        raise ParseError("budget_ratio must stay within (0, 1]")
    if name == "theta" and (lo < 0 or hi > 1):
        raise ParseError("theta axis must stay within [0, 1]")
    if name == "n" and lo < 2:
        raise ParseError("n axis must start at 2 or more")
    return Axis(name=name, lo=lo, hi=hi, steps=steps)


def load_sweep_spec(path_or_data, overrides: dict | None = None) -> SweepSpec:
    """Parse a sweep specification file, applying CLI overrides to the run config."""
    if isinstance(path_or_data, dict):
        data = path_or_data
    else:
        try:
            with open(path_or_data, "r", encoding="utf-8") as fh:
                data = json.load(fh)
        except OSError as exc:
            raise ParseError(f"cannot read {path_or_data}: {exc}") from exc
        except json.JSONDecodeError as exc:
            raise ParseError(f"invalid JSON in {path_or_data}: {exc}") from exc
    if not isinstance(data, dict):
        raise ParseError("sweep spec must be a JSON object")
    for fieldname in ("axis1", "axis2"):
        if fieldname not in data:
            raise ParseError(f"sweep spec is missing field '{fieldname}'")
    axis1 = _parse_axis(data["axis1"], "axis1")
    axis2 = _parse_axis(data["axis2"], "axis2")
    if axis1.name == axis2.name:
        raise ParseError("axis1 and axis2 must vary different parameters")
    fixed = dict(data.get("fixed", {}))
    fixed.setdefault("theta", 0.5)
    fixed.setdefault("n", 2)
    fixed.setdefault("alpha_ratio", 0.5)
    fixed.setdefault("budget_ratio", 0.5)
    fixed.setdefault("alpha_max", 1.0)
    fixed.setdefault("budget_max", 1.0)
    isfp_data = dict(data.get("isfp", {}))
    overrides = overrides or {}
    # Certification at the default 1e-9 tolerance requires the dynamics to
    # land exactly on an equilibrium; averaging weight 0 (pure best-response
    # dynamics) does, while the classic weight-1 average only approaches at
    # rate 1/t.  Sweeps therefore default to weight 0.
    cfg = IsfpConfig(
        max_iterations=int(overrides.get("iters") or isfp_data.get("max_iterations", 50)),
        restarts=int(overrides.get("restarts") or isfp_data.get("restarts", 45)),
        alpha_weight=float(isfp_data.get("alpha_weight", 0.0)),
        seed=int(overrides.get("seed") if overrides.get("seed") is not None
                 else isfp_data.get("seed", 0)),
        grid_resolution=int(overrides.get("grid_resolution")
                            or isfp_data.get("grid_resolution", 400)),
    )
    return SweepSpec(axis1=axis1, axis2=axis2, fixed=fixed, isfp=cfg)


def build_cell_game(params: dict) -> Game:
    """Construct the game for one sweep cell.

    Two projects with coefficients (ratio * alpha_max, alpha_max).  The
    largest budget is budget_max, the second largest is ratio *
    budget_max, and any remaining budgets sit on the equally spaced ladder
    below the second largest.
    """
    theta = float(params["theta"])
    n = int(round(params["n"]))
    amax = float(params["alpha_max"])
    bmax = float(params["budget_max"])
    aratio = max(float(params["alpha_ratio"]), RATIO_FLOOR)
    bratio = max(float(params["budget_ratio"]), RATIO_FLOOR)
    alphas = (aratio * amax, amax)
    second = bratio * bmax
    budgets = [second * (i + 1) / (n - 1) for i in range(n - 1)] + [bmax]
    return Game(theta=theta, budgets=budgets, alphas=alphas)


def predict(game: Game) -> Prediction:
    """Route a game to the applicable closed-form predictor."""
    if game.theta == 0.0:
        return theory.predict_theta0(game)
    if game.theta == 1.0:
        return theory.predict_theta1(game)
    if game.n == 2:
        pred = theory.predict_two_player(game)
        if pred.verdict is Verdict.EXISTS:
            pred = theory.efficiency_two_player(game, pred)
        return pred
    return theory.predict_n_player_sufficient(game)


def _fmt(value) -> str:
    if value is None:
        return ""
    if isinstance(value, (bool, np.bool_)):
        return "true" if value else "false"
    if isinstance(value, (float, np.floating)):
        return repr(float(value))
    return str(value)


def run_sweep_cell(spec: SweepSpec, v1: float, v2: float, i: int, j: int) -> dict:
    params = dict(spec.fixed)
    params[spec.axis1.name] = v1
    params[spec.axis2.name] = v2
    game = build_cell_game(params)
    pred = predict(game)
    result = run_isfp(game, _cell_config(spec.isfp, i, j))
    return {
        "axis1": v1,
        "axis2": v2,
        "theta": game.theta,
        "n": game.n,
        "m": game.m,
        "ne_found": result.converged,
        "efficiency": result.efficiency,
        "iterations": result.iterations,
        "theory_verdict": pred.verdict.value,
        "theory_pos": pred.pos,
        "theory_poa": pred.poa,
        "seed": spec.isfp.seed,
    }


def _cell_config(cfg: IsfpConfig, i: int, j: int) -> IsfpConfig:
    # Mix the cell coordinates into the seed so cells are independent and
    # the sweep result does not depend on evaluation order.
    return IsfpConfig(
        max_iterations=cfg.max_iterations,
        restarts=cfg.restarts,
        alpha_weight=cfg.alpha_weight,
        seed=((cfg.seed * 1_000_003 + i) * 1_000_003 + j) % (2 ** 63),
        eps_ne=cfg.eps_ne,
        grid_resolution=cfg.grid_resolution,
    )


def rows_to_csv(rows: list[dict]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(CSV_HEADER)
    for row in rows:
        writer.writerow([_fmt(row[k]) for k in CSV_HEADER])
    return buf.getvalue()


def _gray(level: int) -> str:
    level = min(max(level, 0), 255)
    return f"#{level:02x}{level:02x}{level:02x}"


def simulation_shade(row: dict) -> str:
    """Cell shade for the simulation map: black = no NE, else gray by efficiency."""
    if str(row["ne_found"]).lower() != "true":
        return _gray(0)
    eff = float(row["efficiency"])
    return _gray(round(64 + 191 * eff))


def theory_shade(row: dict) -> str:
    """Cell shade for the theory map: white = existence, black otherwise."""
    verdict = str(row["theory_verdict"])
    exists = verdict in (Verdict.EXISTS.value, Verdict.EXISTS_NO_SUPPRESSION.value)
    return _gray(255) if exists else _gray(0)


def render_heatmap_svg(rows: list[dict], shade, title: str, cell_px: int = 10) -> str:
    """Render one rect per cell; shade is a pure function of the CSV row."""
    xs = sorted({float(r["axis1"]) for r in rows})
    ys = sorted({float(r["axis2"]) for r in rows})
    xi = {v: p for p, v in enumerate(xs)}
    yi = {v: p for p, v in enumerate(ys)}
    width, height = len(xs) * cell_px, len(ys) * cell_px
    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" '
        f'height="{height + 14}" viewBox="0 0 {width} {height + 14}">',
        f'<title>{title}</title>',
    ]
    for r in rows:
        px = xi[float(r["axis1"])] * cell_px
        # axis2 grows upward, like the printed heatmaps
        py = (len(ys) - 1 - yi[float(r["axis2"])]) * cell_px
        parts.append(
            f'<rect x="{px}" y="{py}" width="{cell_px}" height="{cell_px}" '
            f'fill="{shade(r)}"/>'
        )
    parts.append(
        f'<text x="0" y="{height + 11}" font-size="10">{title}</text>'
    )
    parts.append("</svg>")
    return "\n".join(parts)


def run_sweep(spec: SweepSpec) -> list[dict]:
    rows = []
    for i, v1 in enumerate(spec.axis1.values()):
        for j, v2 in enumerate(spec.axis2.values()):
            rows.append(run_sweep_cell(spec, v1, v2, i, j))
    return rows


def write_sweep_outputs(rows: list[dict], out_dir: str) -> list[str]:
    """Write CSV and both heatmaps atomically; nothing is left on failure."""
    os.makedirs(out_dir, exist_ok=True)
    outputs = {
        "sweep.csv": rows_to_csv(rows),
        "sweep_simulation.svg": render_heatmap_svg(rows, simulation_shade, "simulation"),
        "sweep_theory.svg": render_heatmap_svg(rows, theory_shade, "theory"),
    }
    written = []
    try:
        for name, text in outputs.items():
            tmp = os.path.join(out_dir, name + ".tmp")
            with open(tmp, "w", encoding="utf-8") as fh:
                fh.write(text)
            written.append(tmp)
        final = []
        for name in outputs:
            tmp = os.path.join(out_dir, name + ".tmp")
            dst = os.path.join(out_dir, name)
            os.replace(tmp, dst)
            written.remove(tmp)
            final.append(dst)
        return final
    finally:
        for tmp in written:
            try:
                os.remove(tmp)
            except OSError:
                pass


def _print_analysis(game: Game, out, isfp_cfg: IsfpConfig) -> None:
    levels = level_structure(game)
    print(f"game: n={game.n} players, m={game.m} projects, theta={game.theta}", file=out)
    print(f"budgets: {list(game.budgets)}", file=out)
    print(f"alphas: {list(game.alphas)}", file=out)
    print(
        f"level structure: projects {list(levels.project_levels)} (l={levels.l}, "
        f"k={levels.k}); budgets {list(levels.budget_levels)} (p={levels.p})",
        file=out,
    )
    print(f"optimal welfare: {optimal_welfare(game)!r}", file=out)

    pred = None
    try:
        pred = predict(game)
    except (theory.WrongArity, theory.WrongTheta):
        print("theory: no applicable predictor (single player)", file=out)
    if pred is not None:
        line = f"theory: verdict={pred.verdict.value} case={pred.case_id}"
        if pred.pos is not None:
            line += f" pos={pred.pos!r}"
        if pred.poa is not None:
            line += f" poa={pred.poa!r}"
        if pred.witness_efficiency is not None:
            line += f" witness_efficiency={pred.witness_efficiency!r}"
        print(line, file=out)
        if pred.witness is not None:
            print(f"witness: {pred.witness.rows()}", file=out)
            mode = "exact" if game.m == 2 else "grid"
            verdict = verify_ne(game, pred.witness, mode=mode,
                                resolution=isfp_cfg.grid_resolution)
            status = "IsNE" if verdict.is_ne else f"Deviation({verdict.deviation})"
            print(f"witness verification ({verdict.certificate}): {status}", file=out)
            print(f"witness efficiency: {efficiency(game, pred.witness)!r}", file=out)
    if game.n >= 2:
        print(f"smoothness poa lower bound: {theory.poa_lower_bound_smooth(game)!r}",
              file=out)

    result = run_isfp(game, isfp_cfg)
    if result.converged:
        print(
            f"isfp: converged at restart {result.restart_index} after "
            f"{result.iterations} iterations, efficiency {result.efficiency!r}",
            file=out,
        )
        mode = "exact" if game.m == 2 else "grid"
        cyc = verify_cyclically_strong(game, result.profile, mode=mode,
                                       resolution=isfp_cfg.grid_resolution)
        print(f"cyclically strong: {cyc.status}"
              + (f" (cycle {list(cyc.cycle)})" if cyc.cycle else ""), file=out)
    else:
        print(f"isfp: no equilibrium found in {isfp_cfg.restarts} restarts", file=out)


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="sharedeffort",
        description="Analyze thresholded shared effort games and run parameter sweeps.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    pa = sub.add_parser("analyze", help="report theory and simulation results for one game")
    pa.add_argument("game", help="path to a game JSON file")
    pa.add_argument("--seed", type=int, default=0)
    pa.add_argument("--restarts", type=int, default=45)
    pa.add_argument("--iters", type=int, default=50)
    pa.add_argument("--grid-resolution", type=int, default=400)
    pa.add_argument("--alpha-weight", type=float, default=0.0)

    ps = sub.add_parser("sweep", help="run a two-axis parameter sweep")
    ps.add_argument("spec", help="path to a sweep spec JSON file")
    ps.add_argument("--out", required=True, help="output directory")
    ps.add_argument("--seed", type=int, default=None)
    ps.add_argument("--restarts", type=int, default=None)
    ps.add_argument("--iters", type=int, default=None)
    ps.add_argument("--grid-resolution", type=int, default=None)
    return parser


def main(argv=None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    try:
        if args.command == "analyze":
            game = load_game(args.game)
            cfg = IsfpConfig(
                max_iterations=args.iters,
                restarts=args.restarts,
                seed=args.seed,
                grid_resolution=args.grid_resolution,
                alpha_weight=args.alpha_weight,
            )
            _print_analysis(game, sys.stdout, cfg)
            return 0
        if args.command == "sweep":
            spec = load_sweep_spec(args.spec, overrides={
                "seed": args.seed,
                "restarts": args.restarts,
                "iters": args.iters,
                "grid_resolution": args.grid_resolution,
            })
            rows = run_sweep(spec)
            for path in write_sweep_outputs(rows, args.out):
                print(path)
            return 0
        parser.error(f"unknown command {args.command!r}")
    except (ParseError, InvariantViolation, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except Exception as exc:  # pragma: no cover - defensive
        print(f"internal error: {exc!r}", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
