"""Subgradient sets at infinity and Lipschitz-at-infinity classification.

Three routes compute the subgradient set at infinity:

* ``epigraph_polar`` -- exact: slice the epigraph's normal cone at last
  coordinate -1 (piecewise-affine functions only);
* ``gradient_sampling`` -- convex hull of clustered far-gradient limits
  (justified when the function is Lipschitz at infinity);
* ``support_reconstruction`` -- polyhedral outer shell from directional
  upper-subderivative estimates (always available).

Where two routes apply their results must agree; the acceptance suite
enforces that.  The classifier combines four of the equivalent
characterizations of Lipschitz behaviour at infinity and requires two
passes and no failure before declaring the property.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import List, Optional, Sequence, Tuple

import numpy as np

from .errors import (
    CapabilityError,
    EstimateUnavailableError,
    InconclusiveError,
)
from .estimators import (
    DEFAULT_LADDER,
    IndexSet,
    LadderConfig,
    LimitEstimate,
    clarke_derivative_at_infinity,
    dagger_derivative,
    interior_tangent_test,
    set_shell_points,
    shell_points,
    upper_subderivative,
)
from .extreal import ExtendedReal
from .functions import (
    FuncDesc,
    SetDesc,
    add_functions,
    distance_batch,
    epigraph_set,
    project_batch,
)
from .geometry import (
    DEFAULT_TOL,
    PolyCone,
    PolyConvexSet,
    Tolerance,
    axis_diagonal_grid,
    convex_hull,
    direction_grid,
    polar_cone,
    set_eq,
    slice_cone,
    support_function,
)
from .parsing import Call, IndicatorNode, Node, BinOp, Neg, Piecewise


@dataclass
class SubgradientSetAtInfinity:
    set: PolyConvexSet
    route: str  # epigraph_polar | gradient_sampling | support_reconstruction
    diagnostics: dict = field(default_factory=dict)

    def to_json(self) -> dict:
        return {"set": self.set.to_json(), "route": self.route, "diagnostics": self.diagnostics}


@dataclass
class LipschitzVerdict:
    verdict: str  # lipschitz_at_infinity | not_lipschitz | inconclusive
    evidence: dict
    constant: Optional[float] = None
    radius: Optional[float] = None

    def to_json(self) -> dict:
        return {
            "verdict": self.verdict,
            "evidence": self.evidence,
            "constant": self.constant,
            "radius": self.radius,
        }


# ---------------------------------------------------------------------------
# Route 1: exact epigraph polar
# ---------------------------------------------------------------------------


def subgradients_epigraph_polar(
    f: FuncDesc,
    cross_check: bool = True,
    tol: Tolerance = DEFAULT_TOL,
) -> SubgradientSetAtInfinity:
    """Exact subgradient set of a piecewise-affine function: the slice of
    the epigraph normal cone at last coordinate -1."""
    from .cones import epigraph_cones_piecewise_affine

    pair = epigraph_cones_piecewise_affine(f, cross_check=cross_check, tol=tol)
    sl = slice_cone(pair.normal, -1.0)
    return SubgradientSetAtInfinity(
        set=sl,
        route="epigraph_polar",
        diagnostics={"cones": pair.to_json()},
    )


# ---------------------------------------------------------------------------
# Route 2: gradient sampling
# ---------------------------------------------------------------------------


def _cluster_vectors(items: List[Tuple[int, np.ndarray]], threshold: float) -> List[dict]:
    clusters: List[dict] = []
    for rung, g in items:
        placed = False
        for cl in clusters:
            if np.linalg.norm(cl["mean"] - g) <= threshold:
                cl["members"].append((rung, g))
                cl["mean"] = np.mean([m[1] for m in cl["members"]], axis=0)
                placed = True
                break
        if not placed:
            clusters.append({"mean": g.copy(), "members": [(rung, g)]})
    return clusters


def subgradients_gradient_sampling(
    f: FuncDesc,
    cfg: LadderConfig = DEFAULT_LADDER,
    tol: Tolerance = DEFAULT_TOL,
) -> SubgradientSetAtInfinity:
    """Convex hull of clustered limits of far gradients.

    Points flagged nondifferentiable are retried once with a small
    deterministic jitter.  Diverging gradient norms are reported in the
    diagnostics (evidence against the Lipschitz hypothesis this route
    needs), and the hull is built from whatever finite clusters remain.
    """
    n = f.dim
    collected: List[Tuple[int, np.ndarray]] = []
    norm_per_rung: List[float] = []
    rng = np.random.default_rng([cfg.seed, 31])
    jitter_dirs = rng.standard_normal((8, n))
    jitter_dirs /= np.linalg.norm(jitter_dirs, axis=1, keepdims=True)
    total_valid = 0
    saturated: List[bool] = []
    for k, R in enumerate(cfg.radii):
        X = shell_points(n, R, min(64, cfg.samples_per_shell), cfg.seed, k)
        vals, grads, bad = f.grad_batch(X, tol=tol)
        with np.errstate(invalid="ignore"):
            saturated.append(bool(np.any(~np.isfinite(vals)) or np.any(~np.isfinite(grads))))
        retry = X[bad]
        if len(retry):
            X2 = retry + 10 * tol.abs_tol * jitter_dirs[np.arange(len(retry)) % len(jitter_dirs)]
            v2, g2, b2 = f.grad_batch(X2, tol=tol)
            vals = np.concatenate([vals[~bad], v2[~b2]])
            grads = np.concatenate([grads[~bad], g2[~b2]])
        else:
            vals, grads = vals[~bad], grads[~bad]
        if len(grads) == 0:
            norm_per_rung.append(math.nan)
            continue
        total_valid += len(grads)
        norm_per_rung.append(float(np.max(np.linalg.norm(grads, axis=1))))
        for g in grads:
            collected.append((k, g))
    if total_valid == 0:
        raise EstimateUnavailableError("every sampled point was nondifferentiable")
    max_norm = max((x for x in norm_per_rung if not math.isnan(x)), default=1.0)
    diverging = _norms_diverge(norm_per_rung) or _norms_diverge_into_saturation(norm_per_rung, saturated)
    threshold = max(10 * tol.abs_tol, 1e-3 * (1.0 + max_norm))
    clusters = _cluster_vectors(collected, threshold)
    reps = []
    for cl in clusters:
        rungs = {r for r, _ in cl["members"]}
        if len(cl["members"]) == 1 and len(rungs) < 3:
            continue  # singleton noise
        top = max(rungs)
        reps.append(np.mean([g for r, g in cl["members"] if r == top], axis=0))
    hull = convex_hull(reps, dim=n) if reps else PolyConvexSet(n)
    return SubgradientSetAtInfinity(
        set=hull,
        route="gradient_sampling",
        diagnostics={
            "gradient_norm_per_rung": [None if math.isnan(x) else x for x in norm_per_rung],
            "gradient_norms_diverge": diverging,
            "clusters": len(reps),
        },
    )


def _norms_diverge(norms: List[float]) -> bool:
    vals = [x for x in norms if not math.isnan(x)]
    if len(vals) < 3:
        return False
    tail = vals[-3:]
    return all(b >= 10 * a and a > 0 for a, b in zip(tail, tail[1:]))


def _norms_diverge_into_saturation(norms: List[float], saturated: List[bool]) -> bool:
    """Gradient norms that grow 10x per rung and then overflow count as
    diverging even though the overflowed rungs report no finite norm."""
    first_sat = next((i for i, s in enumerate(saturated) if s), None)
    if first_sat is None:
        return False
    prefix = [x for x in norms[:first_sat] if not math.isnan(x)]
    if not prefix or prefix[-1] < 1e6:
        return False
    return all(b >= 10 * a and a > 0 for a, b in zip(prefix, prefix[1:]))


# ---------------------------------------------------------------------------
# Route 3: support reconstruction
# ---------------------------------------------------------------------------


def reconstruction_directions(n: int) -> np.ndarray:
    if n <= 3:
        return axis_diagonal_grid(n)
    return direction_grid(n, 32)


def _epigraph_cone_from_estimates(
    n: int, directions: np.ndarray, estimates: List[LimitEstimate]
) -> PolyCone:
    """Inner V-approximation of the epigraph tangent cone at infinity."""
    rays = [np.append(np.zeros(n), 1.0)]
    for v, est in zip(directions, estimates):
        if est.value is None:
            continue
        if est.is_finite:
            rays.append(np.append(v, est.value.value))
        elif est.is_neg_inf:
            rays.append(np.append(v, 0.0))
            rays.append(np.append(np.zeros(n), -1.0))
    return PolyCone(n + 1, rays=rays)


def subgradients_support_reconstruction(
    f: FuncDesc,
    cfg: LadderConfig = DEFAULT_LADDER,
    directions: Optional[np.ndarray] = None,
    tol: Tolerance = DEFAULT_TOL,
) -> SubgradientSetAtInfinity:
    """Polyhedral outer approximation from directional subderivative
    estimates: each finite estimate contributes a supporting halfspace,
    +inf directions induce recession rays, and a -inf estimate at 0 makes
    the set empty."""
    n = f.dim
    dirs = directions if directions is not None else reconstruction_directions(n)
    zero_est = upper_subderivative(f, np.zeros(n), cfg, tol)
    diag_rows = []
    if zero_est.is_neg_inf:
        return SubgradientSetAtInfinity(
            set=PolyConvexSet(n),
            route="support_reconstruction",
            diagnostics={"empty_reason": "subderivative at 0 diverges to -inf", "outer": True},
        )
    estimates = []
    inconclusive = 0
    for v in dirs:
        est = upper_subderivative(f, v, cfg, tol)
        estimates.append(est)
        if est.value is None:
            inconclusive += 1
        diag_rows.append({"direction": v.tolist(), "estimate": est.to_json()})
    if inconclusive > len(dirs) / 2:
        raise InconclusiveError(
            f"{inconclusive}/{len(dirs)} directional estimates were inconclusive"
        )
    T = _epigraph_cone_from_estimates(n, dirs, estimates)
    N = polar_cone(T)
    sl = slice_cone(N, -1.0)
    return SubgradientSetAtInfinity(
        set=sl,
        route="support_reconstruction",
        diagnostics={"outer": True, "directional_estimates": diag_rows,
                     "epigraph_tangent_inner": T.to_json(), "epigraph_normal_outer": N.to_json()},
    )


# ---------------------------------------------------------------------------
# Singular subgradients
# ---------------------------------------------------------------------------


def singular_subgradients(
    f: FuncDesc,
    cfg: LadderConfig = DEFAULT_LADDER,
    tol: Tolerance = DEFAULT_TOL,
) -> PolyCone:
    """Slice of the epigraph normal cone at infinity at last coordinate 0
    (exact for piecewise-affine f, outer-sampled otherwise)."""
    from .cones import epigraph_cones_piecewise_affine

    if f.is_piecewise_affine:
        pair = epigraph_cones_piecewise_affine(f, cross_check=False, tol=tol)
        N = pair.normal
    else:
        n = f.dim
        dirs = reconstruction_directions(n)
        estimates = [upper_subderivative(f, v, cfg, tol) for v in dirs]
        zero_est = upper_subderivative(f, np.zeros(n), cfg, tol)
        rays = []
        if zero_est.is_neg_inf:
            rays.append(np.append(np.zeros(n), -1.0))
        T = _epigraph_cone_from_estimates(n, dirs, estimates)
        if rays:
            T = PolyCone(n + 1, rays=np.vstack([T.generators(), np.array(rays)]))
        N = polar_cone(T)
    out = slice_cone(N, 0.0)
    return out


# ---------------------------------------------------------------------------
# Lipschitz classification
# ---------------------------------------------------------------------------


def _structurally_extended(node: Node) -> bool:
    """Can the expression produce genuine +/-inf values (not mere overflow)?"""
    if isinstance(node, IndicatorNode):
        return True
    if isinstance(node, Call):
        return node.name in ("log", "sqrt") or _structurally_extended(node.arg)
    if isinstance(node, Neg):
        return _structurally_extended(node.arg)
    if isinstance(node, BinOp):
        if node.op == "/":
            return True
        if node.op == "^" and node.right.value < 0:
            return True
        return _structurally_extended(node.left) or _structurally_extended(node.right)
    if isinstance(node, Piecewise):
        out = False
        for guard, expr in node.branches:
            out = out or _structurally_extended(expr)
        return out
    return False


def _check_real_valued(f: FuncDesc, cfg: LadderConfig):
    """Refuse extended-valued functions; float overflow of a genuinely
    real-valued expression is tolerated."""
    if not _structurally_extended(f.body):
        return
    for k, R in enumerate(cfg.radii):
        X = shell_points(f.dim, R, min(64, cfg.samples_per_shell), cfg.seed, k)
        with np.errstate(all="ignore"):
            vals = f.eval_batch(X)
        if np.any(np.isinf(vals)) or np.any(np.isnan(vals)):
            raise CapabilityError(
                "function attains +/-inf on far samples; Lipschitz-at-infinity "
                "analysis requires a real-valued function"
            )


def _two_point_lipschitz(f: FuncDesc, cfg: LadderConfig, tol: Tolerance) -> dict:
    """Direct two-point sampling of |f(x)-f(x')| / |x-x'| on far shells."""
    n = f.dim
    U = np.vstack([np.eye(n), -np.eye(n), direction_grid(n, 8)])
    ratios = []
    saturated = []
    witness = None
    for k, R in enumerate(cfg.radii):
        X = shell_points(n, R, min(32, cfg.samples_per_shell), cfg.seed, k)
        with np.errstate(all="ignore"):
            fX = f.eval_batch(X)
        ok = np.isfinite(fX)
        sat = bool(np.any(np.isinf(fX)))
        X, fX = X[ok], fX[ok]
        if len(X) == 0:
            ratios.append(math.nan)
            saturated.append(sat)
            continue
        best = 0.0
        for delta in (1.0, 0.01):
            Y = (X[:, None, :] + delta * U[None, :, :]).reshape(-1, n)
            with np.errstate(all="ignore"):
                fY = f.eval_batch(Y).reshape(len(X), len(U))
            sat = sat or bool(np.any(np.isinf(fY)))
            rat = np.abs(fY - fX[:, None]) / delta
            rat = np.where(np.isnan(rat), -np.inf, rat)
            idx = np.unravel_index(np.argmax(rat), rat.shape)
            if rat[idx] > best:
                best = float(rat[idx])
                witness = {"x": X[idx[0]].tolist(), "offset": (delta * U[idx[1]]).tolist(),
                           "ratio": None if math.isinf(best) else best, "radius": R}
        ratios.append(best)
        saturated.append(sat)
    from .estimators import _classify_saturated  # same trend rules as the ladders

    trend, value = _classify_saturated(ratios, saturated, Tolerance(1e-2, 1e-2, tol.cone_angle_tol))
    return {"ratios": [None if math.isnan(r) else (r if math.isfinite(r) else "+inf") for r in ratios],
            "trend": trend, "value": value, "witness": witness}


def classify_lipschitz_at_infinity(
    f: FuncDesc,
    cfg: LadderConfig = DEFAULT_LADDER,
    tol: Tolerance = DEFAULT_TOL,
) -> LipschitzVerdict:
    """Combine the equivalent characterizations of Lipschitz behaviour at
    infinity: (i) bounded nonempty subgradient set, (iv) direct two-point
    bounds, (v) finite directional derivative on the axes, (vi) trivial
    singular subgradients.  The positive verdict needs two passing
    conditions and none failing."""
    _check_real_valued(f, cfg)
    evidence = {}

    # (i) subgradient set nonempty and compact
    recon = None
    try:
        recon = subgradients_support_reconstruction(f, cfg, tol=tol)
        if recon.set.is_empty:
            evidence["i_subgradients_compact"] = {"status": "fail", "reason": "empty set"}
        elif not recon.set.is_bounded:
            evidence["i_subgradients_compact"] = {"status": "fail", "reason": "unbounded set",
                                                  "rays": recon.set.rays.tolist()}
        else:
            evidence["i_subgradients_compact"] = {"status": "pass", "set": recon.set.to_json()}
    except (InconclusiveError, EstimateUnavailableError) as exc:
        evidence["i_subgradients_compact"] = {"status": "inconclusive", "reason": str(exc)}

    # (iv) two-point Lipschitz sampling
    two_pt = _two_point_lipschitz(f, cfg, tol)
    if two_pt["trend"] == "converged" and two_pt["value"] is not None and math.isfinite(two_pt["value"]):
        evidence["iv_two_point_bound"] = {"status": "pass", **two_pt}
    elif two_pt["trend"] == "diverging_up":
        evidence["iv_two_point_bound"] = {"status": "fail", **two_pt}
    else:
        evidence["iv_two_point_bound"] = {"status": "inconclusive", **two_pt}

    # (v) directional derivative finite on the axes
    axis_status = "pass"
    axis_rows = []
    for i in range(f.dim):
        for sign in (1.0, -1.0):
            v = np.zeros(f.dim)
            v[i] = sign
            est = clarke_derivative_at_infinity(f, v, cfg, tol)
            axis_rows.append({"direction": v.tolist(), "estimate": est.to_json()})
            if est.value is None:
                axis_status = "inconclusive" if axis_status == "pass" else axis_status
            elif not est.is_finite:
                axis_status = "fail"
    evidence["v_directional_finite"] = {"status": axis_status, "directions": axis_rows}

    # (vi) singular subgradients trivial
    try:
        sing = singular_subgradients(f, cfg, tol)
        if sing.is_trivial:
            evidence["vi_singular_trivial"] = {"status": "pass"}
        else:
            evidence["vi_singular_trivial"] = {"status": "fail", "cone": sing.to_json()}
    except (CapabilityError, InconclusiveError, EstimateUnavailableError) as exc:
        evidence["vi_singular_trivial"] = {"status": "inconclusive", "reason": str(exc)}

    statuses = [e["status"] for e in evidence.values()]
    passes, fails = statuses.count("pass"), statuses.count("fail")
    if fails == 0 and passes >= 2:
        verdict = "lipschitz_at_infinity"
    elif fails >= 1 and passes == 0:
        verdict = "not_lipschitz"
    else:
        verdict = "inconclusive"
    constant = radius = None
    if verdict == "lipschitz_at_infinity" and evidence["iv_two_point_bound"]["status"] == "pass":
        constant = float(two_pt["value"])
        radius = float(cfg.radii[0])
    return LipschitzVerdict(verdict=verdict, evidence=evidence, constant=constant, radius=radius)


# ---------------------------------------------------------------------------
# Directionally Lipschitz test
# ---------------------------------------------------------------------------


@dataclass
class DirectionalLipschitzResult:
    verdict: str  # yes | no | inconclusive
    primary: LimitEstimate
    dual: str  # interior | not_interior | inconclusive
    r_used: float

    def to_json(self) -> dict:
        return {"verdict": self.verdict, "primary": self.primary.to_json(),
                "dual": self.dual, "r": self.r_used}


def directionally_lipschitz_test(
    f: FuncDesc,
    v,
    cfg: LadderConfig = DEFAULT_LADDER,
    tol: Tolerance = DEFAULT_TOL,
) -> DirectionalLipschitzResult:
    """Two independent evidence channels: the joint-limsup estimate must be
    finite, and (v, r) must test interior to the epigraph tangent cone at
    infinity.  Disagreement yields 'inconclusive'."""
    if not f.is_lsc:
        raise CapabilityError("test requires a lower semi-continuous function (declare 'lsc')")
    v = np.asarray(v, dtype=float).ravel()
    est = dagger_derivative(f, v, cfg, tol)
    if est.is_finite:
        primary = "yes"
        r = est.value.value + 1.0
    elif est.is_pos_inf:
        primary = "no"
        r = 10.0
    else:
        primary = "inconclusive"
        r = 10.0
    epi = epigraph_set(f)
    dual_raw = interior_tangent_test(epi, np.append(v, r), IndexSet.all(f.dim), cfg, tol)
    dual = {"interior": "yes", "not_interior": "no"}.get(dual_raw, "inconclusive")
    verdict = primary if primary == dual else "inconclusive"
    return DirectionalLipschitzResult(verdict=verdict, primary=est, dual=dual_raw, r_used=r)


# ---------------------------------------------------------------------------
# Route selection
# ---------------------------------------------------------------------------


def best_subgradients(
    f: FuncDesc,
    cfg: LadderConfig = DEFAULT_LADDER,
    tol: Tolerance = DEFAULT_TOL,
    cross_check: bool = True,
) -> SubgradientSetAtInfinity:
    """Route priority: exact epigraph polar, then gradient sampling under a
    passing Lipschitz classification, then support reconstruction."""
    if f.is_piecewise_affine:
        return subgradients_epigraph_polar(f, cross_check=cross_check, tol=tol)
    try:
        verdict = classify_lipschitz_at_infinity(f, cfg, tol)
    except CapabilityError:
        verdict = None
    if verdict is not None and verdict.verdict == "lipschitz_at_infinity":
        out = subgradients_gradient_sampling(f, cfg, tol)
        out.diagnostics["lipschitz"] = verdict.to_json()
        return out
    out = subgradients_support_reconstruction(f, cfg, tol=tol)
    if verdict is not None:
        out.diagnostics["lipschitz"] = verdict.to_json()
    return out


# ---------------------------------------------------------------------------
# Duality table (support function vs directional estimates)
# ---------------------------------------------------------------------------


def duality_table(
    f: FuncDesc,
    S: PolyConvexSet,
    cfg: LadderConfig = DEFAULT_LADDER,
    tol: Tolerance = DEFAULT_TOL,
    count: int = 16,
) -> List[dict]:
    """Per-direction comparison of the subgradient set's support function
    with the upper-subderivative estimate."""
    dirs = direction_grid(f.dim, count)
    rows = []
    for k, v in enumerate(dirs):
        # grid parameter; equals atan2(v2, v1) for the planar grid
        angle = 2 * math.pi * k / count
        est = upper_subderivative(f, v, cfg, tol)
        sup = support_function(S, v, tol)
        if est.value is not None and est.is_finite and sup.is_finite:
            residual = abs(est.value.value - sup.value)
        elif est.value is not None and not est.is_finite and not sup.is_finite:
            residual = 0.0 if (est.is_pos_inf == sup.is_pos_inf) else math.inf
        else:
            residual = math.nan
        rows.append({
            "direction": v.tolist(),
            "angle": angle,
            "estimate": est.to_json(),
            "support": sup.to_json(),
            "residual": None if math.isnan(residual) else (residual if math.isfinite(residual) else "+inf"),
            "error_bar": est.error_bar,
        })
    return rows


# ---------------------------------------------------------------------------
# Sum rule
# ---------------------------------------------------------------------------


@dataclass
class SumRuleReport:
    qualification: str  # witnessed | unverified
    witness_direction: Optional[List[float]]
    inclusion_holds: bool
    empty_branch: bool
    per_direction: List[dict]
    routes: dict
    notes: List[str] = field(default_factory=list)

    def to_json(self) -> dict:
        return {
            "qualification": self.qualification,
            "witness_direction": self.witness_direction,
            "inclusion_holds": self.inclusion_holds,
            "empty_branch": self.empty_branch,
            "per_direction": self.per_direction,
            "routes": self.routes,
            "notes": self.notes,
        }


def sum_rule_check(
    f1: FuncDesc,
    f2: FuncDesc,
    cfg: LadderConfig = DEFAULT_LADDER,
    tol: Tolerance = DEFAULT_TOL,
) -> SumRuleReport:
    """Check the subgradient sum inclusion and the per-direction
    subderivative inequality for f1 + f2.

    The qualification hypothesis (a direction where f1's subderivative is
    finite and f2's stays finite on a neighbourhood) is sampled; when no
    witness is found the checks still run but are labeled 'unverified'.
    """
    f0 = add_functions(f1, f2)
    n = f1.dim
    dirs = reconstruction_directions(n)
    witness = None
    for v in dirs:
        e1 = upper_subderivative(f1, v, cfg, tol)
        if e1.value is None or e1.is_pos_inf:
            continue  # v outside f1's domain cone (or unsettled)
        d2 = dagger_derivative(f2, v, cfg, tol)
        # a finite (or -inf) joint limsup certifies v interior to f2's domain cone
        if d2.value is not None and not d2.is_pos_inf:
            witness = v
            break
    notes = []
    s0 = best_subgradients(f0, cfg, tol, cross_check=False)
    s1 = best_subgradients(f1, cfg, tol, cross_check=False)
    s2 = best_subgradients(f2, cfg, tol, cross_check=False)
    empty_branch = s0.set.is_empty
    inclusion = True
    per_direction = []
    grid = direction_grid(n, 16)
    for v in grid:
        h0 = support_function(s0.set, v, tol)
        h1 = support_function(s1.set, v, tol)
        h2 = support_function(s2.set, v, tol)
        hsum = h1 + h2
        ok = (h0 <= hsum + ExtendedReal(10 * tol.abs_tol)) if (h0.is_finite and hsum.is_finite) else (hsum >= h0)
        if not ok:
            inclusion = False
        e0 = upper_subderivative(f0, v, cfg, tol)
        e1 = upper_subderivative(f1, v, cfg, tol)
        e2 = upper_subderivative(f2, v, cfg, tol)
        ineq_ok = _subderivative_inequality(e0, e1, e2, tol)
        per_direction.append({
            "direction": v.tolist(),
            "support_sum_ok": bool(ok),
            "subderivative_ok": ineq_ok,
            "h0": h0.to_json(), "h1": h1.to_json(), "h2": h2.to_json(),
        })
    if empty_branch:
        notes.append("sum has empty subgradient set at infinity: inclusion holds trivially")
        inclusion = True
    return SumRuleReport(
        qualification="witnessed" if witness is not None else "unverified",
        witness_direction=None if witness is None else list(map(float, witness)),
        inclusion_holds=inclusion,
        empty_branch=empty_branch,
        per_direction=per_direction,
        routes={"sum": s0.route, "f1": s1.route, "f2": s2.route},
        notes=notes,
    )


def _subderivative_inequality(e0: LimitEstimate, e1: LimitEstimate, e2: LimitEstimate, tol: Tolerance) -> Optional[bool]:
    if e0.value is None or e1.value is None or e2.value is None:
        return None
    rhs = e1.value + e2.value
    if not e0.is_finite:
        return bool(e0.value <= rhs) if not e0.is_pos_inf else bool(rhs.is_pos_inf)
    if not rhs.is_finite:
        return rhs.is_pos_inf
    bar = e0.error_bar + e1.error_bar + e2.error_bar + 10 * tol.abs_tol
    return bool(e0.value.value <= rhs.value + bar)


# ---------------------------------------------------------------------------
# Distance-function subgradients
# ---------------------------------------------------------------------------


class _DistanceLift:
    """Duck-typed FuncDesc for d_C: eval/grad via nearest-point projection."""

    def __init__(self, C: SetDesc):
        self.C = C
        self.dim = C.dim

    def eval_batch(self, X):
        return distance_batch(self.C, np.asarray(X, dtype=float))

    def grad_batch(self, X, tol: Tolerance = DEFAULT_TOL):
        X = np.asarray(X, dtype=float)
        P = project_batch(self.C, X)
        diff = X - P
        d = np.linalg.norm(diff, axis=1)
        grads = np.zeros_like(X)
        outside = d > 10 * tol.abs_tol
        grads[outside] = diff[outside] / d[outside, None]
        # interior points have gradient 0; points essentially on the
        # boundary are nondifferentiable
        bad = (~outside) & _on_boundary(self.C, X, tol)
        bad |= np.any(np.isnan(P), axis=1)
        return d, grads, bad


def _on_boundary(C: SetDesc, X: np.ndarray, tol: Tolerance) -> np.ndarray:
    vals = C.constraint_values(X)
    out = np.zeros(len(X), dtype=bool)
    for ci, (_, rel, const) in enumerate(C.constraints):
        out |= np.abs(vals[:, ci] - const) <= 10 * tol.abs_tol
    return out


def distance_subgradients_at_infinity(
    C: SetDesc,
    cfg: LadderConfig = DEFAULT_LADDER,
    tol: Tolerance = DEFAULT_TOL,
) -> SubgradientSetAtInfinity:
    """co({0} united with the limits of normalized far perpendiculars).

    Perpendicular directions are sampled as x' - p with p the projection of
    a slightly offset far boundary point; the result is cross-checked by
    gradient-sampling the distance function itself.
    """
    n = C.dim
    I = IndexSet.all(n)
    rng = np.random.default_rng([cfg.seed, 37])
    U = rng.standard_normal((8, n))
    U /= np.linalg.norm(U, axis=1, keepdims=True)
    U = np.vstack([np.eye(n), -np.eye(n), U])
    collected: List[Tuple[int, np.ndarray]] = []
    for k, R in enumerate(cfg.radii):
        base = set_shell_points(C, I, R, min(32, cfg.samples_per_shell), cfg.seed, k)
        if len(base) == 0:
            continue
        delta = cfg.steps[min(k, len(cfg.steps) - 1)]
        X = (base[:, None, :] + delta * U[None, :, :]).reshape(-1, n)
        P = project_batch(C, X)
        good = ~np.any(np.isnan(P), axis=1)
        X, P = X[good], P[good]
        diff = X - P
        d = np.linalg.norm(diff, axis=1)
        keep = d > max(10 * tol.abs_tol, 1e-3 * delta)
        for vperp in diff[keep] / d[keep, None]:
            collected.append((k, vperp))
    a_empty = not collected
    reps: List[np.ndarray] = []
    if collected:
        clusters = _cluster_vectors(collected, threshold=max(10 * tol.abs_tol, 1e-3))
        for cl in clusters:
            rungs = {r for r, _ in cl["members"]}
            if len(cl["members"]) == 1 and len(rungs) < 3:
                continue
            top = max(rungs)
            m = np.mean([g for r, g in cl["members"] if r == top], axis=0)
            reps.append(m / np.linalg.norm(m))
    hull = convex_hull([np.zeros(n)] + reps, dim=n)
    cross = subgradients_gradient_sampling(_DistanceLift(C), cfg, tol)
    agrees = set_eq(hull, cross.set, Tolerance(1e-2, 1e-2, tol.cone_angle_tol))
    return SubgradientSetAtInfinity(
        set=hull,
        route="gradient_sampling",
        diagnostics={
            "perpendicular_clusters": len(reps),
            "A_empty_sampled": a_empty,
            "cross_check_route": "gradient_sampling on the distance lift",
            "cross_check_agrees": bool(agrees),
            "cross_check_set": cross.set.to_json(),
        },
    )
