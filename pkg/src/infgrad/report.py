"""Analysis requests, report assembly, the golden corpus runner, and
plot-data emission (CSV plus a rendered figure).

Reports are deterministic for a fixed seed: JSON is dumped with sorted
keys and the only volatile fields live under ``meta`` (timestamp and wall
time), which comparisons exclude.
"""

from __future__ import annotations

import csv
import json
import math
import time
from dataclasses import dataclass, field
from datetime import datetime, timezone
from pathlib import Path
from typing import List, Optional, Tuple

import numpy as np

from . import __version__
from .errors import InfgradError, ParseError
from .estimators import (
    DEFAULT_LADDER,
    IndexSet,
    LadderConfig,
    distance_characterization,
    tangent_membership,
)
from .functions import FuncDesc, SetDesc, epigraph_set, parse_function, parse_set
from .geometry import PolyCone, PolyConvexSet, Tolerance, set_eq
from .subgradients import (
    best_subgradients,
    classify_lipschitz_at_infinity,
    directionally_lipschitz_test,
    distance_subgradients_at_infinity,
    duality_table,
    singular_subgradients,
    sum_rule_check,
)

KINDS = ("cones", "subdiff", "lipschitz", "dirlip", "sumrule", "distance", "optcheck", "tangent-test")

PROVENANCE_TAGS = ("paper", "trivial", "derived-oracle")


@dataclass
class AnalysisRequest:
    kind: str
    f: Optional[str] = None
    f2: Optional[str] = None
    set_source: Optional[str] = None
    v: Optional[List[float]] = None
    dim: Optional[int] = None
    index_set: Optional[List[int]] = None
    declared: Tuple[str, ...] = ()
    cfg: LadderConfig = field(default_factory=LadderConfig)
    tol: Tolerance = field(default_factory=Tolerance)

    def validate(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown analysis kind {self.kind!r}")
        needs_f = {"subdiff", "lipschitz", "dirlip", "optcheck"}
        if self.kind in needs_f and not self.f:
            raise ValueError(f"{self.kind} requires a function (--f)")
        if self.kind == "sumrule" and not (self.f and self.f2):
            raise ValueError("sumrule requires two functions (--f and --f2)")
        if self.kind in ("distance",) and not self.set_source:
            raise ValueError(f"{self.kind} requires a constraint set (--set)")
        if self.kind == "cones" and not (self.f or self.set_source):
            raise ValueError("cones requires --f (epigraph) or --set")
        if self.kind == "tangent-test":
            if not (self.f or self.set_source):
                raise ValueError("tangent-test requires --f (epigraph) or --set")
            if self.v is None:
                raise ValueError("tangent-test requires a direction (--v)")
        if self.kind == "dirlip" and self.v is None:
            raise ValueError("dirlip requires a direction (--v)")

    def to_json(self) -> dict:
        return {
            "kind": self.kind,
            "f": self.f,
            "f2": self.f2,
            "set": self.set_source,
            "v": self.v,
            "dim": self.dim,
            "index_set": self.index_set,
            "declared": list(self.declared),
            "cfg": self.cfg.to_json(),
            "tol": {"abs_tol": self.tol.abs_tol, "rel_tol": self.tol.rel_tol,
                    "cone_angle_tol": self.tol.cone_angle_tol},
        }

    @classmethod
    def from_json(cls, obj: dict) -> "AnalysisRequest":
        cfg = LadderConfig.from_json(obj.get("cfg", {})) if obj.get("cfg") else LadderConfig()
        tol_obj = obj.get("tol", {})
        tol = Tolerance(
            abs_tol=float(tol_obj.get("abs_tol", 1e-6)),
            rel_tol=float(tol_obj.get("rel_tol", 1e-6)),
            cone_angle_tol=float(tol_obj.get("cone_angle_tol", 1e-6)),
        )
        return cls(
            kind=obj["kind"],
            f=obj.get("f"),
            f2=obj.get("f2"),
            set_source=obj.get("set"),
            v=obj.get("v"),
            dim=obj.get("dim"),
            index_set=obj.get("index_set"),
            declared=tuple(obj.get("declared", ())),
            cfg=cfg,
            tol=tol,
        )


def _sanitize(obj):
    """Make a report JSON-safe: +/-inf and NaN floats become strings/None."""
    if isinstance(obj, dict):
        return {k: _sanitize(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_sanitize(v) for v in obj]
    if isinstance(obj, float):
        if math.isnan(obj):
            return None
        if math.isinf(obj):
            return "+inf" if obj > 0 else "-inf"
        return obj
    if isinstance(obj, (np.floating, np.integer)):
        return _sanitize(float(obj))
    if isinstance(obj, np.ndarray):
        return _sanitize(obj.tolist())
    return obj


def _parse_inputs(req: AnalysisRequest) -> Tuple[Optional[FuncDesc], Optional[FuncDesc], Optional[SetDesc]]:
    f = parse_function(req.f, dim=req.dim, declared=req.declared) if req.f else None
    f2 = parse_function(req.f2, dim=req.dim or (f.dim if f else None), declared=req.declared) if req.f2 else None
    C = None
    if req.set_source:
        C = parse_set(req.set_source, dim=req.dim if not f else None)
    if f is not None and C is not None and C.dim != f.dim:
        # allow a function of fewer variables over a higher-dimensional set
        if f.dim < C.dim:
            f = FuncDesc(f.body, C.dim, source=f.source, declared=f.declared)
        else:
            raise ParseError(f"dimension mismatch: f in R^{f.dim}, set in R^{C.dim}")
    return f, f2, C


def run_request(req: AnalysisRequest) -> dict:
    """Dispatch a request and assemble the report envelope."""
    req.validate()
    start = time.perf_counter()
    f, f2, C = _parse_inputs(req)
    cfg, tol = req.cfg, req.tol
    body: dict

    if req.kind == "subdiff":
        sub = best_subgradients(f, cfg, tol)
        table = duality_table(f, sub.set, cfg, tol)
        sing = singular_subgradients(f, cfg, tol)
        body = {
            "subgradients": sub.to_json(),
            "route": sub.route,
            "singular": sing.to_json(),
            "duality_residuals": table,
        }
    elif req.kind == "lipschitz":
        verdict = classify_lipschitz_at_infinity(f, cfg, tol)
        sub = best_subgradients(f, cfg, tol)
        body = {"lipschitz": verdict.to_json(), "subgradients": sub.to_json(), "route": sub.route}
    elif req.kind == "dirlip":
        res = directionally_lipschitz_test(f, np.array(req.v, dtype=float), cfg, tol)
        body = {"dirlip": res.to_json()}
    elif req.kind == "sumrule":
        rep = sum_rule_check(f, f2, cfg, tol)
        body = {"sumrule": rep.to_json()}
    elif req.kind == "distance":
        sub = distance_subgradients_at_infinity(C, cfg, tol)
        body = {"subgradients": sub.to_json(), "route": sub.route}
    elif req.kind == "optcheck":
        from .optimality import constrained_condition_at_infinity, fermat_at_infinity, find_minimizing_sequence

        seq = find_minimizing_sequence(f, C, cfg, tol)
        cert = (constrained_condition_at_infinity(f, C, cfg, tol) if C is not None
                else fermat_at_infinity(f, cfg, tol))
        body = {"certificate": cert.to_json(), "minimizing_sequence": seq.to_json()}
    elif req.kind == "cones":
        from .cones import epigraph_cones_piecewise_affine, exact_cones_polyhedral, sampled_normal_cone

        if C is not None:
            I = IndexSet(tuple(req.index_set)) if req.index_set else IndexSet.all(C.dim)
            if C.kind == "polyhedral" or C.is_piecewise_polyhedral:
                pair = exact_cones_polyhedral(C, I, tol=tol)
            else:
                pair = sampled_normal_cone(C, I, cfg, tol)
        else:
            pair = epigraph_cones_piecewise_affine(f, tol=tol)
        body = {"cones": pair.to_json()}
    elif req.kind == "tangent-test":
        target = C if C is not None else epigraph_set(f)
        I = IndexSet(tuple(req.index_set)) if req.index_set else (
            IndexSet.all(f.dim) if C is None else IndexSet.all(target.dim))
        v = np.array(req.v, dtype=float)
        verdict = tangent_membership(target, v, I, cfg, tol)
        oracle = distance_characterization(target, v, cfg, tol, I)
        body = {
            "tangent_test": {"status": verdict.status, "witness": verdict.witness},
            "distance_characterization": {
                "estimate": oracle.estimate.to_json(),
                "verdict": oracle.verdict,
            },
        }
    else:  # pragma: no cover - guarded by validate()
        raise ValueError(req.kind)

    report = {
        "schema": 1,
        "kind": req.kind,
        "request": req.to_json(),
        **body,
        "meta": {
            "version": __version__,
            "seed": cfg.seed,
            "timestamp": datetime.now(timezone.utc).isoformat(),
            "wall_time_s": round(time.perf_counter() - start, 6),
        },
    }
    return _sanitize(report)


def dump_report(report: dict, path: Optional[Path] = None) -> str:
    text = json.dumps(report, indent=2, sort_keys=True) + "\n"
    if path is not None:
        Path(path).write_text(text)
    return text


def strip_volatile(report: dict) -> dict:
    out = dict(report)
    meta = dict(out.get("meta", {}))
    meta.pop("timestamp", None)
    meta.pop("wall_time_s", None)
    out["meta"] = meta
    return out


# ---------------------------------------------------------------------------
# Golden corpus
# ---------------------------------------------------------------------------


@dataclass
class GoldenCase:
    id: str
    provenance: str
    request: AnalysisRequest
    expected: dict
    tolerance: dict = field(default_factory=dict)

    @classmethod
    def from_json(cls, obj: dict, source: str = "") -> "GoldenCase":
        if "provenance" not in obj:
            raise ValueError(f"golden case {obj.get('id', source)!r} lacks a provenance tag")
        if obj["provenance"] not in PROVENANCE_TAGS:
            raise ValueError(
                f"golden case {obj.get('id', source)!r} has unknown provenance {obj['provenance']!r}"
            )
        if "expected" not in obj:
            raise ValueError(f"golden case {obj.get('id', source)!r} lacks an expected object")
        return cls(
            id=obj.get("id", source),
            provenance=obj["provenance"],
            request=AnalysisRequest.from_json(obj["request"]),
            expected=obj["expected"],
            tolerance=obj.get("tolerance", {}),
        )


def _case_tol(case: GoldenCase) -> Tolerance:
    t = case.tolerance
    return Tolerance(
        abs_tol=float(t.get("abs_tol", 1e-6)),
        rel_tol=float(t.get("rel_tol", 1e-6)),
        cone_angle_tol=float(t.get("cone_angle_tol", 1e-6)),
    )


def compare_expected(case: GoldenCase, report: dict) -> Tuple[bool, str]:
    """Kind-aware comparison of a report against the expected object."""
    exp = case.expected
    tol = _case_tol(case)
    kind = case.request.kind
    try:
        if kind in ("subdiff", "distance"):
            got = PolyConvexSet.from_json(report["subgradients"]["set"])
            want = PolyConvexSet.from_json(exp["set"], dim=got.dim)
            if not set_eq(got, want, tol):
                return False, f"set mismatch: got {report['subgradients']['set']}"
            if "route" in exp and report["route"] != exp["route"]:
                return False, f"route mismatch: got {report['route']}, want {exp['route']}"
            return True, "set matches"
        if kind == "lipschitz":
            verdict = report["lipschitz"]["verdict"]
            if verdict != exp["verdict"]:
                return False, f"verdict mismatch: got {verdict}, want {exp['verdict']}"
            if "set" in exp:
                got = PolyConvexSet.from_json(report["subgradients"]["set"])
                want = PolyConvexSet.from_json(exp["set"], dim=got.dim)
                if not set_eq(got, want, tol):
                    return False, "subgradient set mismatch"
            if "constant_range" in exp:
                lo, hi = exp["constant_range"]
                L = report["lipschitz"]["constant"]
                if L is None or not (lo <= L <= hi):
                    return False, f"constant {L} outside [{lo}, {hi}]"
            return True, "verdict matches"
        if kind == "dirlip":
            got = report["dirlip"]["verdict"]
            return (got == exp["verdict"], f"got {got}, want {exp['verdict']}")
        if kind == "sumrule":
            got = report["sumrule"]["inclusion_holds"]
            return (got == exp["inclusion_holds"], f"inclusion_holds={got}")
        if kind == "optcheck":
            got = report["certificate"]["status"]
            if got != exp["status"]:
                return False, f"status mismatch: got {got}, want {exp['status']}"
            if "residual_max" in exp:
                dec = report["certificate"].get("decomposition") or {}
                res = dec.get("residual")
                if res is None or res > exp["residual_max"]:
                    return False, f"residual {res} above {exp['residual_max']}"
            return True, "certificate matches"
        if kind == "cones":
            got_t = PolyCone.from_json(report["cones"]["tangent"])
            got_n = PolyCone.from_json(report["cones"]["normal"])
            ok = True
            msg = []
            if "tangent" in exp:
                want = PolyCone.from_json(exp["tangent"], dim=got_t.dim)
                if not set_eq(got_t, want, tol):
                    ok = False
                    msg.append("tangent mismatch")
            if "normal" in exp:
                want = PolyCone.from_json(exp["normal"], dim=got_n.dim)
                if not set_eq(got_n, want, tol):
                    ok = False
                    msg.append("normal mismatch")
            return ok, "; ".join(msg) or "cones match"
        if kind == "tangent-test":
            got = report["tangent_test"]["status"]
            return (got == exp["status"], f"got {got}, want {exp['status']}")
    except KeyError as e:
        return False, f"report lacks field {e}"
    return False, f"no comparator for kind {kind!r}"


def builtin_corpus_dir() -> Path:
    return Path(__file__).parent / "corpus"


@dataclass
class CorpusResult:
    case_id: str
    provenance: str
    passed: bool
    message: str
    report: Optional[dict] = None
    error: Optional[str] = None


def run_corpus(path: Optional[Path] = None, out_dir: Optional[Path] = None,
               seed: Optional[int] = None) -> List[CorpusResult]:
    """Execute every golden case under ``path`` (default: the shipped corpus).

    Cases missing an expected object are reported and the run continues.
    Results come back ordered by case id.
    """
    root = Path(path) if path else builtin_corpus_dir()
    files = sorted(root.glob("*.json"))
    results: List[CorpusResult] = []
    for fp in files:
        try:
            obj = json.loads(fp.read_text())
            case = GoldenCase.from_json(obj, source=fp.stem)
        except (ValueError, json.JSONDecodeError) as exc:
            results.append(CorpusResult(fp.stem, "?", False, f"unloadable case: {exc}"))
            continue
        if seed is not None:
            case.request.cfg = LadderConfig(**{**case.request.cfg.__dict__, "seed": seed})
        try:
            report = run_request(case.request)
        except InfgradError as exc:
            results.append(CorpusResult(case.id, case.provenance, False,
                                        f"execution error: {exc}", error=str(exc)))
            continue
        ok, msg = compare_expected(case, report)
        results.append(CorpusResult(case.id, case.provenance, ok, msg, report=report))
        if out_dir is not None:
            out_dir = Path(out_dir)
            out_dir.mkdir(parents=True, exist_ok=True)
            dump_report(report, out_dir / f"{case.id}.json")
    results.sort(key=lambda r: r.case_id)
    return results


def summarize_corpus(results: List[CorpusResult]) -> str:
    lines = []
    for r in results:
        status = "PASS" if r.passed else "FAIL"
        lines.append(f"[{status}] {r.case_id} ({r.provenance}): {r.message}")
    n_pass = sum(r.passed for r in results)
    lines.append(f"{n_pass}/{len(results)} cases passed")
    return "\n".join(lines)


# ---------------------------------------------------------------------------
# Plot data: CSV plus a rendered figure
# ---------------------------------------------------------------------------


def emit_plot_data(report: dict, out_base: Path) -> Tuple[Path, Path]:
    """Write the directional table of a subdiff-style report as CSV and
    render the matching figure next to it.

    Returns (csv_path, png_path).
    """
    rows = report.get("duality_residuals")
    if not rows:
        raise ValueError("report carries no support/subderivative table (run a subdiff analysis)")
    out_base = Path(out_base)
    csv_path = out_base.with_suffix(".csv")
    png_path = out_base.with_suffix(".png")
    csv_path.parent.mkdir(parents=True, exist_ok=True)

    def enc(x):
        if x is None:
            return ""
        return x

    with csv_path.open("w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["angle", "subderivative_estimate", "support_value", "residual"])
        for r in rows:
            est = r["estimate"]["value"] if isinstance(r["estimate"], dict) else r["estimate"]
            w.writerow([r["angle"], enc(est), enc(r["support"]), enc(r["residual"])])

    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    angles = [r["angle"] for r in rows]

    def numeric(x):
        if x is None or isinstance(x, str):
            return math.nan
        return float(x)

    est_vals = [numeric(r["estimate"]["value"] if isinstance(r["estimate"], dict) else r["estimate"]) for r in rows]
    sup_vals = [numeric(r["support"]) for r in rows]
    res_vals = [numeric(r["residual"]) for r in rows]
    fig, (ax1, ax2) = plt.subplots(2, 1, figsize=(7, 6), sharex=True)
    ax1.plot(angles, sup_vals, "o-", label="support value", color="tab:blue")
    ax1.plot(angles, est_vals, "x--", label="directional estimate", color="tab:orange")
    ax1.set_ylabel("value")
    ax1.legend(loc="best")
    ax1.set_title(report.get("request", {}).get("f") or report.get("kind", ""))
    ax2.bar(angles, res_vals, width=0.25, color="tab:green")
    ax2.set_xlabel("direction angle (rad)")
    ax2.set_ylabel("|residual|")
    fig.tight_layout()
    fig.savefig(png_path, dpi=120)
    plt.close(fig)
    return csv_path, png_path
