"""Command-line front end.

Subcommands: check, dual, soliton-vector, guillemin, solve, report.  Every
command reads a polytope document (``--input``) and, given ``--out``, writes
``report.json`` there; ``guillemin`` adds ``scan.csv`` and ``solve`` adds
``path.csv``, ``fields_t*.csv`` and a checkpoint directory.

Exit codes: 0 success, 1 I/O failure, 2 invalid input, 3 non-convergence.
"""
from __future__ import annotations

import argparse
import csv
import datetime as _dt
import json
import logging
import math
import sys
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Any, Sequence

import numpy as np

from . import __version__
from . import ma_solver as ma
from .guillemin import GuilleminPotential
from .integrals import volume
from .polytope import (
    DualPolytope,
    LatticePolytope,
    PolytopeError,
    barycenter,
    boundary_distance,
    dual_polytope,
    is_gorenstein,
    parse_polytope,
    validate_toric_fano,
)
from .soliton import futaki_vanishes, solve_soliton_vector

log = logging.getLogger("toric_soliton")

EXIT_OK, EXIT_IO, EXIT_INPUT, EXIT_SOLVER = 0, 1, 2, 3
CP2_VERTICES = {(1, 0), (0, 1), (-1, -1)}


class InputError(Exception):
    pass


class SolverFailure(Exception):
    pass


@dataclass
class RunConfig:
    command: str
    input: str | None
    document: dict | None
    out: str | None
    R: float = 8.0
    resolution: int = 161
    t_start: float = 0.3
    t_step: float = 0.05
    tol: float | None = None
    seed: int = 0
    radii: list[float] = field(default_factory=lambda: [5.0, 10.0, 20.0, 40.0])
    samples: int = 64
    oracle: bool = False
    resume: bool = False
    all_fields: bool = False
    r_sensitivity: bool = True

    def validate(self) -> None:
        if self.tol is not None and not self.tol > 0:
            raise InputError("--tol must be positive")
        if not self.R > 0:
            raise InputError("--R must be positive")
        if self.resolution < 33 or self.resolution % 2 == 0:
            raise InputError("--resolution must be odd and at least 33")
        if not 0 < self.t_start <= 1 or not self.t_step > 0:
            raise InputError("--t-start must lie in (0, 1] and --t-step must be positive")
        if self.samples < 1 or not self.radii:
            raise InputError("--samples must be positive and --radii non-empty")


# ---------------------------------------------------------------------------
# formatting helpers


def _fmt(x: float) -> str:
    return f"{x:.6g}"


def _frac(q) -> str:
    return str(q)


def _yes(flag: bool) -> str:
    return "yes" if flag else "no"


def _g17(x) -> str:
    return format(float(x), ".17g")


def _write_csv(path: Path, header: Sequence[str], rows) -> None:
    with path.open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([_g17(v) for v in row])


def _jsonable(obj: Any) -> Any:
    if isinstance(obj, dict):
        return {k: _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, (np.floating, float)):
        v = float(obj)
        return v if math.isfinite(v) else repr(v)
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, np.bool_):
        return bool(obj)
    if isinstance(obj, np.ndarray):
        return _jsonable(obj.tolist())
    return obj


# ---------------------------------------------------------------------------
# report fragments


def check_fragment(q: LatticePolytope, p: DualPolytope) -> tuple[dict, str]:
    fano = validate_toric_fano(q)
    gor, index = is_gorenstein(p)
    bary = barycenter(p)
    vanishes = futaki_vanishes(p)
    frag = {
        "fano": fano.to_dict(),
        "barycenter": [_frac(c) for c in bary],
        "futaki_vanishes": vanishes,
        "volume": _frac(volume(p)),
    }
    gor_text = "yes" if gor else f"no (index {index})"
    summary = f"Fano: {_yes(fano.is_fano)}, Gorenstein: {gor_text}, Futaki vanishes: {_yes(vanishes)}"
    return frag, summary


def dual_fragment(p: DualPolytope) -> tuple[dict, str]:
    frag = {
        "facets": [{"normal": list(n), "constant": 1} for n in p.normals],
        "vertices": [[_frac(c) for c in v] for v in p.vertices],
        "triangulation": [[[_frac(c) for c in v] for v in s] for s in p.triangulation],
    }
    lines = ["dual vertices:"] + ["  (" + ", ".join(_frac(c) for c in v) + ")" for v in p.vertices]
    lines.append(f"triangulation: {len(p.triangulation)} simplices, volume {_frac(volume(p))}")
    return frag, "\n".join(lines)


def soliton_fragment(p: DualPolytope, tol: float) -> tuple[dict, str, bool]:
    sv = solve_soliton_vector(p, tol=tol)
    frag = sv.to_dict()
    frag["tol"] = tol
    summary = (
        f"c = ({', '.join(_fmt(v) for v in sv.c)}), residual {_fmt(sv.residual_norm)}, "
        f"iterations {sv.iterations}, converged: {_yes(sv.converged)}"
    )
    return frag, summary, sv.converged


def _interior_samples(p: DualPolytope, count: int, rng: np.random.Generator) -> np.ndarray:
    """Random points of P pulled towards the origin so no slack is tiny."""
    verts = p.vertex_array
    weights = rng.dirichlet(np.ones(len(verts)), size=count)
    return 0.9 * weights @ verts


def guillemin_fragment(p: DualPolytope, radii: Sequence[float], samples: int, seed: int,
                       potential: GuilleminPotential | None = None):
    """Lemma scan plus the Cauchy-Binet and Legendre self-tests."""
    g = potential or GuilleminPotential(p)
    scan = g.lemma_scan(radii, samples)
    rng = np.random.default_rng(seed)
    ys = _interior_samples(p, 100, rng)
    evals = [g.u0_eval(y) for y in ys]
    direct = np.array([np.linalg.det(e[2]) for e in evals])
    cb = np.array([g.det_hess_u0(y) for y in ys])
    cb_dev = float(np.max(np.abs(cb - direct) / np.abs(direct)))
    xs = np.array([e[1] for e in evals])
    _, back, _ = g.legendre_batch(xs)
    round_trip = float(np.max(np.abs(back - ys)))
    ratio = scan.saturation_ratio()
    frag = {
        "scan": scan.to_dict(),
        "saturation_ratio": [float(r) for r in ratio],
        "cauchy_binet_max_rel_dev": cb_dev,
        "legendre_round_trip_max_err": round_trip,
        "seed": seed,
    }
    lines = [
        f"saturation ratio: log-det defect {_fmt(ratio[0])}, support gap {_fmt(ratio[1])}",
        f"Cauchy-Binet max relative deviation: {_fmt(cb_dev)}",
        f"Legendre round trip max error: {_fmt(round_trip)}",
    ]
    return frag, scan, "\n".join(lines)


# ---------------------------------------------------------------------------
# solve


def _fields_rows(state: ma.ContinuityState, p: DualPolytope):
    try:
        res = np.asarray(ma.residual(state), dtype=float)
    except ma.ConvexityError:
        res = np.full((state.grid.resolution - 2,) * 2, np.nan)
    full = np.full((state.grid.resolution,) * 2, np.nan)
    full[1:-1, 1:-1] = res
    nodes = state.grid.nodes
    phi = np.asarray(state.phi, dtype=float)
    for i in range(state.grid.resolution):
        for j in range(state.grid.resolution):
            yield (nodes[i, j, 0], nodes[i, j, 1], phi[i, j], state.phi0[i, j],
                   phi[i, j] - state.phi0[i, j], full[i, j])


def _path_row(d: dict) -> list:
    return [d["t"], d["m_t"], d["x_t"][0], d["x_t"][1], d["sup_phi_minus_phi0"],
            d["inf_phi_minus_phi0"], d["newton_iters"], d["residual_norm"], d["shift"]]


PATH_HEADER = ["t", "m_t", "x_t1", "x_t2", "sup_phi_minus_phi0", "inf_phi_minus_phi0",
               "newton_iters", "residual", "shift"]
FIELD_HEADER = ["x1", "x2", "phi", "phi0", "phi_minus_phi0", "residual"]


def cp2_exact(nodes: np.ndarray) -> np.ndarray:
    """Closed-form Kahler-Einstein potential on the CP^2 polytope."""
    x1, x2 = nodes[..., 0], nodes[..., 1]
    return 3 * np.logaddexp(0, np.logaddexp(x1, x2)) - x1 - x2 - math.log(9)


def run_solve(cfg: RunConfig, q: LatticePolytope, p: DualPolytope, out: Path | None) -> tuple[dict, str, bool]:
    if p.dim != 2:
        raise InputError("solve is only available in dimension 2")
    if cfg.oracle and set(q.vertices) != CP2_VERTICES:
        raise InputError("--oracle needs the CP^2 polytope")
    tol = cfg.tol if cfg.tol is not None else 1e-8
    sv = solve_soliton_vector(p)
    if not sv.converged:
        raise SolverFailure("soliton vector did not converge")
    grid = ma.build_grid(cfg.R, cfg.resolution)
    schedule = ma.ContinuitySchedule(cfg.t_start, cfg.t_step, tol)
    potential = GuilleminPotential(p)
    ckpt = out / "checkpoint" if out else None
    rows: list[list] = []
    resume_from = None
    if cfg.resume:
        if ckpt is None or not (ckpt / "state.json").exists():
            raise InputError("--resume needs an existing checkpoint under --out")
        resume_from = ma.load_state(ckpt / "state")
        if resume_from.grid != grid:
            raise InputError("checkpoint grid does not match --R/--resolution")
        # the state file is written before the path table, so rebuild its row
        rows = [r for r in json.loads((ckpt / "path.json").read_text()) if r[0] < resume_from.t - 1e-12]
        rows.append(_path_row(resume_from.diagnostics()))
        log.info("resuming from t=%s", resume_from.t)
    if ckpt:
        ckpt.mkdir(parents=True, exist_ok=True)

    def on_step(state: ma.ContinuityState) -> None:
        d = state.diagnostics()
        rows.append(_path_row(d))
        log.info("t=%.4f residual %.3e newton %d", state.t, state.residual_norm, state.newton_iters)
        if out:
            ma.save_state(state, ckpt / "state")
            (ckpt / "path.json").write_text(json.dumps(_jsonable(rows)))
            if cfg.all_fields:
                _write_csv(out / f"fields_t{state.t:.4f}.csv", FIELD_HEADER, _fields_rows(state, p))

    path = ma.continuity_solve(p, schedule, grid, sv.c, potential, resume_from=resume_from, on_step=on_step)
    frag: dict[str, Any] = {
        "grid": {"R": grid.half_width, "resolution": grid.resolution, "h": grid.h},
        "schedule": {"t_start": schedule.t_start, "t_step": schedule.t_step, "tol": tol},
        "c_vec": [float(v) for v in sv.c],
        "normalization": "boundary shift fixed by the mass identity (beta)",
        "boundary_distance_a0": boundary_distance(p),
        "completed": path.completed,
        "failed_t": path.failed_t,
        "message": path.message,
        "path": [dict(zip(PATH_HEADER, r)) for r in rows],
    }
    lines = []
    if rows:
        bounds = np.abs(np.array(rows)[:, [1, 4, 5]]).max(axis=0)
        xt = float(np.max(np.hypot(np.array(rows)[:, 2], np.array(rows)[:, 3])))
        frag["observed_bounds"] = {"m_t": bounds[0], "x_t": xt, "abs_sup_phi_minus_phi0": bounds[1],
                                   "abs_inf_phi_minus_phi0": bounds[2]}
        lines.append(f"path: {len(rows)} steps, max |m_t| {_fmt(bounds[0])}, max |x_t| {_fmt(xt)}")
    if out:
        _write_csv(out / "path.csv", PATH_HEADER, rows)
    if not path.completed:
        lines.append(f"continuity path failed at t={path.failed_t}: {path.message}")
        return frag, "\n".join(lines), False
    final = path.states[-1]
    boundary = ma.make_boundary(p, potential, final.phi0, final.c_vec)
    ver = ma.verify_solution(final, p, tol, boundary)
    frag["verification"] = ver.to_dict()
    frag["shift"] = final.shift
    lines.append(
        f"t=1: residual {_fmt(ver.residual_norm)}, gradient margin {_fmt(ver.gradient_margin)}, "
        f"shift {_fmt(final.shift)}, verification passed: {_yes(ver.passed)}"
    )
    if out and not cfg.all_fields:
        _write_csv(out / "fields_t1.0000.csv", FIELD_HEADER, _fields_rows(final, p))
    if cfg.r_sensitivity:
        try:
            delta, big = ma.r_sensitivity(p, final, schedule, potential)
            frag["r_sensitivity"] = {"R_large": big.half_width, "sup_difference": delta}
            lines.append(f"R-sensitivity (R={_fmt(grid.half_width)} vs {_fmt(big.half_width)}): {_fmt(delta)}")
        except ma.ContinuityError as exc:
            frag["r_sensitivity"] = {"error": str(exc)}
            lines.append(f"R-sensitivity failed: {exc}")
    if cfg.oracle:
        err = float(np.abs(np.asarray(final.phi, dtype=float) - cp2_exact(grid.nodes)).max())
        frag["oracle_sup_error"] = err
        lines.append(f"sup error vs closed-form solution: {_fmt(err)}")
    return frag, "\n".join(lines), ver.residual_ok


# ---------------------------------------------------------------------------
# driver


def _load_document(cfg: RunConfig) -> dict:
    if cfg.document is not None:
        return cfg.document
    if cfg.input is None:
        raise InputError("--input is required")
    text = Path(cfg.input).read_text()
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise InputError(f"{cfg.input}: malformed JSON ({exc})") from exc


def execute(cfg: RunConfig) -> tuple[dict, str, int]:
    """Run one command; returns (report document, human summary, exit code)."""
    cfg.validate()
    doc = _load_document(cfg)
    cfg.document = doc
    q = parse_polytope(doc)
    p = dual_polytope(q)
    out = Path(cfg.out) if cfg.out else None
    if out:
        out.mkdir(parents=True, exist_ok=True)
    report: dict[str, Any] = {}
    lines: list[str] = []
    code = EXIT_OK
    cmd = cfg.command
    if cmd in ("check", "report", "solve"):
        frag, text = check_fragment(q, p)
        report["check"] = frag
        lines.append(text)
    if cmd in ("dual", "report"):
        frag, text = dual_fragment(p)
        report["dual"] = frag
        lines.append(text)
    if cmd in ("soliton-vector", "report"):
        frag, text, ok = soliton_fragment(p, cfg.tol if cfg.tol is not None else 1e-10)
        report["soliton_vector"] = frag
        lines.append(text)
        code = code if ok else EXIT_SOLVER
    if cmd in ("guillemin", "report"):
        frag, scan, text = guillemin_fragment(p, cfg.radii, cfg.samples, cfg.seed)
        report["guillemin"] = frag
        lines.append(text)
        if out:
            (out / "scan.csv").write_text(scan.to_csv())
    if cmd == "solve":
        frag, text, ok = run_solve(cfg, q, p, out)
        report["solve"] = frag
        lines.append(text)
        code = code if ok else EXIT_SOLVER
    report = {
        "version": __version__,
        "timestamp": _dt.datetime.now(_dt.timezone.utc).isoformat(timespec="seconds"),
        "config": asdict(cfg),
        **report,
    }
    if out:
        (out / "report.json").write_text(json.dumps(_jsonable(report), indent=2) + "\n")
    return report, "\n".join(lines), code


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="toric-soliton",
        description="Toric Fano polytopes, soliton vectors and the continuity method.",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    def positive(kind):
        def conv(text):
            value = kind(text)
            if not value > 0:
                raise argparse.ArgumentTypeError(f"must be positive, got {text}")
            return value
        return conv

    common = argparse.ArgumentParser(add_help=False)
    src = common.add_mutually_exclusive_group(required=True)
    src.add_argument("--input", help="polytope JSON document {dim, vertices}")
    src.add_argument("--replay", metavar="REPORT", help="re-run the config echoed in a report.json")
    common.add_argument("--out", help="output directory")
    common.add_argument("--tol", type=positive(float), help="solver tolerance")
    common.add_argument("--seed", type=int, default=0, help="seed for randomized self-tests")
    common.add_argument("-v", "--verbose", action="count", default=0)

    sub.add_parser("check", parents=[common], help="Fano/Gorenstein/Futaki checks")
    sub.add_parser("dual", parents=[common], help="dual polytope and triangulation")
    sub.add_parser("soliton-vector", parents=[common], help="solve for the soliton vector")
    for name in ("guillemin", "report"):
        sp = sub.add_parser(name, parents=[common],
                            help="lemma scan and self-tests" if name == "guillemin" else "full non-PDE report")
        sp.add_argument("--radii", type=positive(float), nargs="+", default=[5.0, 10.0, 20.0, 40.0])
        sp.add_argument("--samples", type=positive(int), default=64)
    solve = sub.add_parser("solve", parents=[common], help="continuity path for the Monge-Ampere equation")
    solve.add_argument("--R", type=positive(float), default=8.0, help="box half width")
    solve.add_argument("--resolution", type=int, default=161, help="nodes per axis (odd)")
    solve.add_argument("--t-start", type=positive(float), default=0.3)
    solve.add_argument("--t-step", type=positive(float), default=0.05)
    solve.add_argument("--oracle", action="store_true", help="compare with the closed-form CP^2 solution")
    solve.add_argument("--resume", action="store_true", help="continue from the checkpoint in --out")
    solve.add_argument("--all-fields", action="store_true", help="write a field CSV at every t")
    solve.add_argument("--no-r-sensitivity", dest="r_sensitivity", action="store_false",
                       help="skip the re-solve on the enlarged box")
    return parser


def config_from_args(args: argparse.Namespace) -> RunConfig:
    if args.replay:
        echo = json.loads(Path(args.replay).read_text())["config"]
        echo["out"] = args.out if args.out is not None else echo.get("out")
        echo["command"] = args.command
        return RunConfig(**echo)
    cfg = RunConfig(command=args.command, input=args.input, document=None, out=args.out,
                    tol=args.tol, seed=args.seed)
    for name in ("R", "resolution", "t_start", "t_step", "radii", "samples", "oracle", "resume",
                 "all_fields", "r_sensitivity"):
        if hasattr(args, name):
            setattr(cfg, name, getattr(args, name))
    return cfg


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(
        level=logging.WARNING - 10 * min(args.verbose, 2),
        format="%(levelname)s %(name)s: %(message)s",
    )
    try:
        cfg = config_from_args(args)
        _, text, code = execute(cfg)
    except (InputError, PolytopeError, ValueError, KeyError, TypeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except OSError as exc:
        print(f"I/O error: {exc}", file=sys.stderr)
        return EXIT_IO
    except (SolverFailure, ma.ContinuityError, ma.ConvexityError) as exc:
        print(f"solver failure: {exc}", file=sys.stderr)
        return EXIT_SOLVER
    print(text)
    return code


if __name__ == "__main__":
    sys.exit(main())
