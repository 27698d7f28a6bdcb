"""Command-line front end.

Subcommands mirror the analysis kinds plus the corpus runner and the
plot-data emitter; see README for examples.  Exit codes: 0 success,
1 failed corpus cases or a failed check, 2 parse errors, 3 capability
errors, 4 inconclusive/unavailable estimates.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from .errors import (
    CapabilityError,
    EstimateUnavailableError,
    InconclusiveError,
    InfgradError,
    ParseError,
)
from .estimators import LadderConfig
from .geometry import Tolerance
from .report import (
    AnalysisRequest,
    builtin_corpus_dir,
    dump_report,
    emit_plot_data,
    run_corpus,
    run_request,
    summarize_corpus,
)

EXIT_PARSE = 2
EXIT_CAPABILITY = 3
EXIT_INCONCLUSIVE = 4


def _floats(text: str):
    return [float(t) for t in text.replace(",", " ").split()]


def _ints(text: str):
    return [int(t) for t in text.replace(",", " ").split()]


def _read_source(text: str) -> str:
    if text.startswith("@"):
        return Path(text[1:]).read_text().strip()
    return text


def _add_common(p: argparse.ArgumentParser):
    p.add_argument("--seed", type=int, default=None, help="sampling seed")
    p.add_argument("--config", type=str, default=None, help="JSON ladder config file")
    p.add_argument("--out", type=str, default=None, help="output path")
    p.add_argument("--tol", type=float, default=None, help="absolute/relative tolerance")
    p.add_argument("--radii", type=str, default=None, help="comma-separated radius ladder")
    p.add_argument("--steps", type=str, default=None, help="comma-separated step ladder")
    p.add_argument("--eps", type=str, default=None, help="comma-separated ball-radius ladder")
    p.add_argument("--samples", type=int, default=None, help="shell sample count")


def _add_inputs(p: argparse.ArgumentParser, f=False, f2=False, sset=False, v=False):
    if f:
        p.add_argument("--f", type=str, help="function expression (or @file)")
    if f2:
        p.add_argument("--f2", type=str, help="second function expression (or @file)")
    if sset:
        p.add_argument("--set", dest="set_source", type=str, help="constraint set (or @file)")
    if v:
        p.add_argument("--v", type=str, help="direction vector, e.g. '1,0'")
    p.add_argument("--dim", type=int, default=None, help="ambient dimension override")
    p.add_argument("--index", type=str, default=None, help="index set, e.g. '1,2'")
    p.add_argument("--declare", type=str, default=None,
                   help="comma-separated declared properties (lsc, continuous, finite)")


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="infgrad",
                                 description="Variational analysis at infinity: cones, subgradients, optimality")
    sub = ap.add_subparsers(dest="command", required=True)

    specs = {
        "cones": dict(f=True, sset=True),
        "subdiff": dict(f=True),
        "lipschitz": dict(f=True),
        "dirlip": dict(f=True, v=True),
        "sumrule": dict(f=True, f2=True),
        "distance": dict(sset=True),
        "optcheck": dict(f=True, sset=True),
        "tangent-test": dict(f=True, sset=True, v=True),
    }
    for kind, opts in specs.items():
        p = sub.add_parser(kind, help=f"run a {kind} analysis")
        _add_inputs(p, **{k: True for k in opts})
        _add_common(p)

    pc = sub.add_parser("corpus", help="run the golden-example corpus")
    pc.add_argument("path", nargs="?", default=None, help="corpus directory (default: shipped)")
    _add_common(pc)

    pp = sub.add_parser("plotdata", help="emit a CSV + figure from a subdiff report")
    pp.add_argument("--report", type=str, default=None, help="existing report JSON")
    pp.add_argument("--f", type=str, default=None, help="function to analyze instead")
    pp.add_argument("--dim", type=int, default=None)
    pp.add_argument("--declare", type=str, default=None)
    _add_common(pp)
    return ap


def _ladder_from_args(args) -> LadderConfig:
    base = {}
    if args.config:
        base = json.loads(Path(args.config).read_text())
    cfg = LadderConfig.from_json(base) if base else LadderConfig()
    over = {}
    if args.radii:
        over["radii"] = tuple(_floats(args.radii))
    if args.steps:
        over["steps"] = tuple(_floats(args.steps))
    if args.eps:
        over["eps_ball"] = tuple(_floats(args.eps))
    if args.samples is not None:
        over["samples_per_shell"] = args.samples
    if args.seed is not None:
        over["seed"] = args.seed
    if over:
        cfg = LadderConfig(**{**cfg.__dict__, **over})
    return cfg


def _tol_from_args(args) -> Tolerance:
    if args.tol is not None:
        return Tolerance(abs_tol=args.tol, rel_tol=args.tol, cone_angle_tol=max(args.tol, 1e-9))
    return Tolerance()


def _request_from_args(kind: str, args) -> AnalysisRequest:
    return AnalysisRequest(
        kind=kind,
        f=_read_source(args.f) if getattr(args, "f", None) else None,
        f2=_read_source(args.f2) if getattr(args, "f2", None) else None,
        set_source=_read_source(args.set_source) if getattr(args, "set_source", None) else None,
        v=_floats(args.v) if getattr(args, "v", None) else None,
        dim=getattr(args, "dim", None),
        index_set=_ints(args.index) if getattr(args, "index", None) else None,
        declared=tuple(args.declare.split(",")) if getattr(args, "declare", None) else (),
        cfg=_ladder_from_args(args),
        tol=_tol_from_args(args),
    )


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.command == "corpus":
            out_dir = Path(args.out) if args.out else None
            results = run_corpus(args.path, out_dir=out_dir, seed=args.seed)
            print(summarize_corpus(results))
            return 0 if all(r.passed for r in results) else 1
        if args.command == "plotdata":
            if args.report:
                report = json.loads(Path(args.report).read_text())
            elif args.f:
                req = _request_from_args("subdiff", args)
                report = run_request(req)
            else:
                print("plotdata requires --report or --f", file=sys.stderr)
                return EXIT_PARSE
            out = Path(args.out) if args.out else Path("plotdata")
            csv_path, png_path = emit_plot_data(report, out)
            print(f"wrote {csv_path} and {png_path}")
            return 0
        req = _request_from_args(args.command, args)
        report = run_request(req)
        text = dump_report(report, Path(args.out) if args.out else None)
        print(text, end="")
        return 0
    except ParseError as exc:
        print(f"parse error: {exc}", file=sys.stderr)
        return EXIT_PARSE
    except CapabilityError as exc:
        print(f"capability error: {exc}", file=sys.stderr)
        return EXIT_CAPABILITY
    except (InconclusiveError, EstimateUnavailableError) as exc:
        print(f"inconclusive: {exc}", file=sys.stderr)
        return EXIT_INCONCLUSIVE
    except InfgradError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except ValueError as exc:
        print(f"invalid request: {exc}", file=sys.stderr)
        return EXIT_PARSE


if __name__ == "__main__":
    sys.exit(main())
