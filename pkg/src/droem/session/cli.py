"""Command-line interface.

Exit codes: 0 success, 1 verification failure, 2 usage error.  The DROEM_LOG
environment variable sets the log level.
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from fractions import Fraction

from ..errors import DroemError, ParseError
from ..scalars import parse_rational

log = logging.getLogger("droem.cli")


def _setup_logging() -> None:
    level = os.environ.get("DROEM_LOG", "WARNING").upper()
    logging.basicConfig(level=getattr(logging, level, logging.WARNING),
                        format="%(asctime)s %(name)s %(levelname)s %(message)s")


def algebra_report(h, D: int) -> dict:
    """sl2, extension, and primary-field relation residuals in exact mode."""
    from ..fields import canonical_primary_field
    from ..verma import EXACT, commutator, make_module, vector_field_generator

    mod = make_module(parse_rational(h), D, EXACT)
    rows = []

    def row(case, relation, dif, window):
        ok = dif.is_zero_below(window)
        rows.append({"case": case, "relation": relation,
                     "max_residual": 0.0 if ok else dif.max_abs_below(window),
                     "valid_degrees": window, "scalar_mode": "exact",
                     "verdict": "exact" if ok else "fails"})

    gens = {k: vector_field_generator(mod, k) for k in range(-1, min(5, D) + 1)}
    for i in range(-1, 2):
        for j in range(-1, 2):
            if not -1 <= i + j <= 1:
                continue
            dif = commutator(gens[i], gens[j]) - gens[i + j].scale(Fraction(i - j))
            row("sl2", f"[L{i},L{j}]-({i - j})L{i + j}", dif, D - 2)
    for i in range(2, 5):
        for j in range(2, 5):
            if i + j > min(5, D):
                continue
            dif = commutator(gens[i], gens[j]) - gens[i + j].scale(Fraction(i - j))
            row("w1", f"[L{i},L{j}]-({i - j})L{i + j}", dif, D)
    for k in range(2, min(4, D - 1) + 1):
        dif = commutator(gens[1], gens[k]) - gens[k + 1].scale(Fraction(1 - k))
        row("mixed", f"[L1,L{k}]-({1 - k})L{k + 1}", dif, D - 1)
    for spin in (1, 2):
        field, rep = canonical_primary_field(mod, spin)
        worst = max((c.max_abs for c in rep.checks), default=0.0)
        rows.append({"case": f"primary-spin-{spin}",
                     "relation": "defining commutation relations",
                     "max_residual": worst,
                     "valid_degrees": f"{len(rep.checks)} windows",
                     "scalar_mode": "exact",
                     "verdict": "exact" if rep.all_exact else "fails"})
    ok = all(r["verdict"] == "exact" for r in rows)
    return {"h": str(parse_rational(h)), "D": D, "rows": rows, "all_exact": ok}


def cmd_simulate(args) -> int:
    from .config import SessionConfig
    from .events import load_event_file
    from .loop import run_scripted

    config = SessionConfig.load(args.config)
    events = load_event_file(args.trajectory) if args.trajectory else []
    sink = None
    if args.frames:
        sink = _png_sink(args.frames, config)
    rec = run_scripted(config, events, frame_sink=sink)
    rec.save(args.out)
    print(f"run record written to {args.out} ({len(rec.steps)} steps)")
    return 0 if rec.aborted is None else 1


def cmd_replay(args) -> int:
    from .record import verify_record

    result = verify_record(args.run)
    if args.verify:
        if result["ok"]:
            print("replay verified: all digests match")
            return 0
        print(f"replay FAILED: {result['detail']}", file=sys.stderr)
        return 1
    print(json.dumps(result))
    return 0


def cmd_check_algebra(args) -> int:
    report = algebra_report(args.h, args.trunc)
    payload = json.dumps(report, indent=2, default=str)
    if args.report:
        with open(args.report, "w") as fh:
            fh.write(payload)
    else:
        print(payload)
    return 0 if report["all_exact"] else 1


def cmd_check_cutoff(args) -> int:
    from ..cutoff import CutoffSpec, nonlinear_sl2_probe, solve_cutoff_dilatation
    from ..errors import DegenerateDifferenceError
    from ..verma import EXACT, make_module

    mod = make_module(parse_rational(args.h), args.trunc, EXACT)
    spec = CutoffSpec.for_module(mod, args.N)
    probe = nonlinear_sl2_probe(mod, spec)
    solved_ok = False
    try:
        _, dil = solve_cutoff_dilatation(mod, spec)
        probe["dilatation_rows"] = dil.rows
        solved_ok = any(r["verdict"] == "exact"
                        and r["relation"] == "[L1cut, J-1cut] = Id"
                        and "solved" in r["convention"] for r in dil.rows)
    except DegenerateDifferenceError as e:
        probe["dilatation_rows"] = [{"relation": "[L1cut, J-1cut] = Id",
                                     "verdict": f"degenerate ({e})"}]
    payload = json.dumps(probe, indent=2, default=str)
    if args.report:
        with open(args.report, "w") as fh:
            fh.write(payload)
    else:
        print(payload)
    return 0 if (solved_ok or probe["degenerate_difference_at"]) else 1


def cmd_check_symmetries(args) -> int:
    from ..symmetries import defect_grid_report

    if os.path.exists(args.grid):
        with open(args.grid) as fh:
            grid = json.load(fh)
    else:
        try:
            grid = json.loads(args.grid)
        except json.JSONDecodeError as e:
            raise ParseError(f"--grid is neither a file nor inline JSON: {e}") from e
    report = defect_grid_report(grid)
    payload = json.dumps(report, indent=2, default=str)
    if args.report:
        with open(args.report, "w") as fh:
            fh.write(payload)
    else:
        print(payload)
    return 0


def _png_sink(frames_dir: str, config):
    from ..render import compose_fibers

    os.makedirs(frames_dir, exist_ok=True)

    def sink(step, frame):
        from PIL import Image

        rgb = compose_fibers(frame, config.palette)
        img = Image.fromarray((rgb * 255).astype("uint8"))
        img.save(os.path.join(frames_dir, f"frame-{step:06d}.png"))

    return sink


def cmd_render(args) -> int:
    from .loop import run_scripted
    from .record import RunRecord

    rec = RunRecord.load(args.run)
    sink = _png_sink(args.frames, rec.config)
    run_scripted(rec.config, rec.events, frame_sink=sink)
    print(f"frames written to {args.frames}")
    return 0


def cmd_serve(args) -> int:
    from .config import SessionConfig
    from .service import serve

    config = SessionConfig.load(args.config)
    serve(config, args.port, host=args.host, record_dir=args.records,
          realtime=not args.max_rate)
    return 0


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="droem",
                                description="gaze-steered operator-algebra laboratory")
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("simulate", help="run a scripted session")
    s.add_argument("--config", required=True)
    s.add_argument("--trajectory", default=None, help="gaze event file (JSONL)")
    s.add_argument("--out", required=True, help="run record output path")
    s.add_argument("--frames", default=None, help="optional PNG frame directory")
    s.set_defaults(fn=cmd_simulate)

    s = sub.add_parser("replay", help="re-run a record and compare digests")
    s.add_argument("--run", required=True)
    s.add_argument("--verify", action="store_true")
    s.set_defaults(fn=cmd_replay)

    s = sub.add_parser("check-algebra", help="exact relation suite")
    s.add_argument("--h", required=True)
    s.add_argument("--trunc", type=int, required=True)
    s.add_argument("--report", default=None)
    s.set_defaults(fn=cmd_check_algebra)

    s = sub.add_parser("check-cutoff", help="cut-off dilatation probe")
    s.add_argument("--h", required=True)
    s.add_argument("--N", type=int, required=True)
    s.add_argument("--trunc", type=int, required=True)
    s.add_argument("--report", default=None)
    s.set_defaults(fn=cmd_check_cutoff)

    s = sub.add_parser("check-symmetries", help="defect grid report")
    s.add_argument("--grid", required=True, help="JSON file or inline JSON")
    s.add_argument("--report", default=None)
    s.set_defaults(fn=cmd_check_symmetries)

    s = sub.add_parser("render", help="rasterize a run record to PNG frames")
    s.add_argument("--run", required=True)
    s.add_argument("--frames", required=True)
    s.set_defaults(fn=cmd_render)

    s = sub.add_parser("serve", help="run the session service")
    s.add_argument("--config", required=True)
    s.add_argument("--port", type=int, required=True)
    s.add_argument("--host", default="127.0.0.1")
    s.add_argument("--records", default="runs")
    s.add_argument("--max-rate", action="store_true",
                   help="run without wall-clock pacing")
    s.set_defaults(fn=cmd_serve)
    return p


def main(argv=None) -> int:
    _setup_logging()
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return 2 if e.code not in (0,) else 0
    try:
        return args.fn(args)
    except ParseError as e:
        print(f"error: {e}", file=sys.stderr)
        return 2
    except DroemError as e:
        print(f"error: {e}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
