"""Necessary optimality conditions for infima that escape to infinity.

``find_minimizing_sequence`` hunts for the best values over growing balls
(coarse shell sampling plus a short local descent per shell) and decides
whether the minimum is attained at a bounded point or walks outward.  When
it escapes with a finite infimum, zero must be a subgradient at infinity
(unconstrained case) or reachable as xi + w with w in the constraint set's
normal cone at infinity (constrained case).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import List, Optional, Tuple

import numpy as np

from .errors import CapabilityError, EstimateUnavailableError, InconclusiveError
from .estimators import (
    DEFAULT_LADDER,
    IndexSet,
    LadderConfig,
    interior_tangent_test,
    upper_subderivative,
)
from .extreal import NEG_INF, POS_INF, ExtendedReal
from .functions import FuncDesc, SetDesc, distance_batch, project_batch
from .geometry import (
    DEFAULT_TOL,
    MinkowskiCertificate,
    PolyCone,
    PolyConvexSet,
    Tolerance,
    minkowski_contains_zero,
)
from .subgradients import SubgradientSetAtInfinity, best_subgradients


@dataclass
class MinimizingSequenceReport:
    points: List[List[float]]
    values: List[float]
    inf_estimate: ExtendedReal
    escapes_to_infinity: bool
    attained_flag: bool

    def to_json(self) -> dict:
        return {
            "points": self.points,
            "values": [v if math.isfinite(v) else ("-inf" if v < 0 else "+inf") for v in self.values],
            "inf_estimate": self.inf_estimate.to_json(),
            "escapes_to_infinity": self.escapes_to_infinity,
            "attained": self.attained_flag,
        }


@dataclass
class OptimalityCertificate:
    condition: str  # fermat_infinity | constrained_infinity
    holds: Optional[bool]  # None marks not-applicable / inconclusive
    status: str  # holds | fails | not_applicable | inconclusive
    reason: str = ""
    decomposition: Optional[dict] = None
    directional_check: List[dict] = field(default_factory=list)
    subgradients: Optional[dict] = None
    qualification: str = ""

    def to_json(self) -> dict:
        return {
            "condition": self.condition,
            "status": self.status,
            "holds": self.holds,
            "reason": self.reason,
            "decomposition": self.decomposition,
            "directional_check": self.directional_check,
            "subgradients": self.subgradients,
            "qualification": self.qualification,
        }


# ---------------------------------------------------------------------------
# Minimizing sequences
# ---------------------------------------------------------------------------


def _descend(f: FuncDesc, C: Optional[SetDesc], x0: np.ndarray, radius: float,
             iters: int = 200, tol: Tolerance = DEFAULT_TOL) -> np.ndarray:
    """Short projected-gradient / coordinate descent inside the radius ball."""
    x = x0.copy()
    n = f.dim
    cheap_projection = C is None or C.kind == "polyhedral" or C.is_piecewise_polyhedral
    if not cheap_projection:
        iters = min(iters, 40)
    step = max(radius / 16.0, 1e-3)
    with np.errstate(all="ignore"):
        fx_arr = f.eval_batch(x[None, :])
    fx = float(fx_arr[0])
    for _ in range(iters):
        moved = False
        vals, grads, bad = f.grad_batch(x[None, :], tol=tol)
        g = grads[0]
        candidates = []
        if not bad[0] and np.all(np.isfinite(g)) and np.linalg.norm(g) > 0:
            candidates.append(x - step * g / max(1.0, np.linalg.norm(g)))
        for i in range(n):
            for s in (1.0, -1.0):
                c = x.copy()
                c[i] += s * step
                candidates.append(c)
        cand = np.array(candidates)
        norms = np.linalg.norm(cand, axis=1)
        cand = cand[norms <= radius]
        if len(cand) == 0:
            step /= 2
            if step < 1e-9 * max(1.0, radius):
                break
            continue
        if C is not None:
            cand = project_batch(C, cand, starts=1)
            ok = ~np.any(np.isnan(cand), axis=1)
            cand = cand[ok]
            if len(cand) == 0:
                step /= 2
                continue
            cand = cand[np.linalg.norm(cand, axis=1) <= radius * 1.5]
            if len(cand) == 0:
                step /= 2
                continue
        with np.errstate(all="ignore"):
            fc = f.eval_batch(cand)
        fc = np.where(np.isnan(fc), np.inf, fc)
        best = int(np.argmin(fc))
        if fc[best] < fx - 1e-15 * max(1.0, abs(fx)):
            x, fx = cand[best], float(fc[best])
            moved = True
        if not moved:
            step /= 2
            if step < 1e-9 * max(1.0, radius):
                break
    return x


def find_minimizing_sequence(
    f: FuncDesc,
    C: Optional[SetDesc] = None,
    cfg: LadderConfig = DEFAULT_LADDER,
    tol: Tolerance = DEFAULT_TOL,
) -> MinimizingSequenceReport:
    """Best-found values on growing balls, with escape/attained verdicts.

    Escape is declared when the best value keeps (weakly) improving while
    the best point's norm grows across the top rungs; attainment when a
    bounded point already achieves the final value.  Divergence of the
    values themselves reports an unbounded-below infimum.
    """
    n = f.dim
    rng = np.random.default_rng([cfg.seed, 41])
    best_pts: List[np.ndarray] = []
    best_vals: List[float] = []
    for k, R in enumerate(cfg.radii):
        samples = [np.zeros(n)]
        for frac in (1.0, 0.5, 0.1):
            r = R * frac
            U = np.vstack([np.eye(n), -np.eye(n),
                           rng.standard_normal((min(32, cfg.samples_per_shell), n))])
            U = U / np.linalg.norm(U, axis=1, keepdims=True)
            samples.append(r * U)
        X = np.vstack([s if s.ndim == 2 else s[None, :] for s in samples])
        if C is not None:
            X = project_batch(C, X)
            X = X[~np.any(np.isnan(X), axis=1)]
            if len(X) == 0:
                continue
        with np.errstate(all="ignore"):
            vals = f.eval_batch(X)
        vals = np.where(np.isnan(vals), np.inf, vals)
        finite = np.isfinite(vals)
        if not np.any(finite):
            continue
        order = np.argsort(vals)
        # polish the few most promising candidates, tie-breaking toward
        # small norms so attained minima stay put
        cands = []
        for i in order[:4]:
            cands.append(_descend(f, C, X[i], R, tol=tol))
        cand = np.array(cands)
        with np.errstate(all="ignore"):
            fc = f.eval_batch(cand)
        fc = np.where(np.isnan(fc), np.inf, fc)
        val_min = float(np.min(fc))
        near = fc <= val_min + tol.abs_tol
        norms = np.linalg.norm(cand, axis=1)
        norms[~near] = np.inf
        pick = int(np.argmin(norms))
        best_pts.append(cand[pick])
        best_vals.append(float(fc[pick]))
    if not best_vals:
        raise EstimateUnavailableError("no finite values found on any sampled ball")

    if _values_diverge_down(best_vals):
        return MinimizingSequenceReport(
            points=[p.tolist() for p in best_pts],
            values=best_vals,
            inf_estimate=NEG_INF,
            escapes_to_infinity=True,
            attained_flag=False,
        )
    f_star = min(best_vals)
    # attained: a bounded point achieves the infimum estimate
    small_R = cfg.radii[0]
    attained = any(
        abs(v - f_star) <= tol.abs_tol and np.linalg.norm(p) <= small_R
        for p, v in zip(best_pts, best_vals)
    )
    norms = [float(np.linalg.norm(p)) for p in best_pts]
    top = min(3, len(norms))
    growing = all(norms[i + 1] >= norms[i] * 1.5 for i in range(len(norms) - top, len(norms) - 1))
    improving = all(
        best_vals[i + 1] <= best_vals[i] + tol.abs_tol
        for i in range(len(best_vals) - top, len(best_vals) - 1)
    )
    escapes = (not attained) and growing and improving
    return MinimizingSequenceReport(
        points=[p.tolist() for p in best_pts],
        values=best_vals,
        inf_estimate=ExtendedReal(f_star),
        escapes_to_infinity=escapes,
        attained_flag=attained,
    )


def _values_diverge_down(vals: List[float]) -> bool:
    if len(vals) < 3:
        return False
    tail = vals[-3:]
    ok = all(b < a for a, b in zip(tail, tail[1:]))
    return ok and tail[-1] <= -1e6


# ---------------------------------------------------------------------------
# Fermat condition at infinity
# ---------------------------------------------------------------------------


def fermat_at_infinity(
    f: FuncDesc,
    cfg: LadderConfig = DEFAULT_LADDER,
    tol: Tolerance = DEFAULT_TOL,
) -> OptimalityCertificate:
    """If a minimizing sequence escapes with finite infimum, zero must be a
    subgradient at infinity; attained or unbounded-below problems are
    reported not-applicable."""
    seq = find_minimizing_sequence(f, None, cfg, tol)
    if seq.inf_estimate.is_neg_inf:
        return OptimalityCertificate(
            condition="fermat_infinity", holds=None, status="not_applicable",
            reason="objective is unbounded below on the sampled balls",
        )
    if seq.attained_flag:
        return OptimalityCertificate(
            condition="fermat_infinity", holds=None, status="not_applicable",
            reason="infimum is attained at a bounded point",
        )
    if not seq.escapes_to_infinity:
        return OptimalityCertificate(
            condition="fermat_infinity", holds=None, status="inconclusive",
            reason="no escaping minimizing sequence was identified",
        )
    sub = best_subgradients(f, cfg, tol, cross_check=False)
    if sub.set.is_empty:
        return OptimalityCertificate(
            condition="fermat_infinity", holds=False, status="fails",
            reason="subgradient set at infinity is empty",
            subgradients=sub.to_json(),
        )
    margin = sub.set.distance_to(np.zeros(f.dim))
    holds = margin <= 10 * tol.abs_tol
    return OptimalityCertificate(
        condition="fermat_infinity",
        holds=holds,
        status="holds" if holds else "fails",
        reason=f"membership margin {margin:.3g} via route {sub.route}",
        subgradients=sub.to_json(),
    )


# ---------------------------------------------------------------------------
# Constrained condition at infinity
# ---------------------------------------------------------------------------


def _membership_only(f: FuncDesc, C: SetDesc, cfg: LadderConfig, tol: Tolerance) -> Optional[dict]:
    from .cones import exact_cones_polyhedral, sampled_normal_cone

    I = IndexSet.all(C.dim)
    if C.kind == "polyhedral" or C.is_piecewise_polyhedral:
        pair = exact_cones_polyhedral(C, I, cross_check=False, tol=tol)
    else:
        pair = sampled_normal_cone(C, I, cfg, tol)
    sub = best_subgradients(f, cfg, tol, cross_check=False)
    if sub.set.is_empty:
        return {"membership": False, "note": "empty subgradient set"}
    cert = minkowski_contains_zero(sub.set, pair.normal, tol)
    out = {"membership": bool(cert.holds)}
    if cert.holds:
        out.update({"xi": cert.xi.tolist(), "w": cert.w.tolist(),
                    "residual": float(np.linalg.norm(cert.xi + cert.w))})
    return out


def constrained_condition_at_infinity(
    f: FuncDesc,
    C: SetDesc,
    cfg: LadderConfig = DEFAULT_LADDER,
    tol: Tolerance = DEFAULT_TOL,
) -> OptimalityCertificate:
    """Escape on C with finite infimum forces 0 into the Minkowski sum of
    the subgradient set and the constraint normal cone at infinity, and
    nonnegative subderivatives along tangent directions."""
    from .cones import exact_cones_polyhedral, sampled_normal_cone

    seq = find_minimizing_sequence(f, C, cfg, tol)
    if seq.inf_estimate.is_neg_inf:
        return OptimalityCertificate(
            condition="constrained_infinity", holds=None, status="not_applicable",
            reason="objective is unbounded below on the sampled feasible balls",
        )
    if seq.attained_flag:
        # the necessary condition is not established by sampling, but the
        # membership itself may still be worth recording (it is trivially
        # true e.g. for constant objectives)
        cert = OptimalityCertificate(
            condition="constrained_infinity", holds=None, status="not_applicable",
            reason="infimum is attained at a bounded feasible point",
        )
        try:
            info = _membership_only(f, C, cfg, tol)
            cert.decomposition = info
        except Exception:
            pass
        return cert
    if not seq.escapes_to_infinity:
        return OptimalityCertificate(
            condition="constrained_infinity", holds=None, status="inconclusive",
            reason="no escaping minimizing sequence was identified",
        )
    I = IndexSet.all(C.dim)
    try:
        if C.kind == "polyhedral" or C.is_piecewise_polyhedral:
            pair = exact_cones_polyhedral(C, I, cross_check=False, tol=tol)
        else:
            pair = sampled_normal_cone(C, I, cfg, tol)
    except (CapabilityError, EstimateUnavailableError) as exc:
        return OptimalityCertificate(
            condition="constrained_infinity", holds=None, status="inconclusive",
            reason=f"normal cone unavailable: {exc}",
        )
    sub = best_subgradients(f, cfg, tol, cross_check=False)
    if sub.set.is_empty:
        return OptimalityCertificate(
            condition="constrained_infinity", holds=False, status="fails",
            reason="subgradient set at infinity is empty",
            subgradients=sub.to_json(),
        )
    cert = minkowski_contains_zero(sub.set, pair.normal, tol)

    # qualification: a subderivative-domain direction interior to the
    # tangent cone (sampled); recorded, not enforced
    qual = "unverified"
    probe_dirs = [g for g in pair.tangent.generators()]
    for v in probe_dirs:
        est = upper_subderivative(f, v, cfg, tol)
        if est.value is None or est.is_pos_inf:
            continue
        status = interior_tangent_test(C, v, I, cfg, tol)
        if status == "interior":
            qual = "witnessed"
            break

    directional = []
    ok_dirs = True
    rng = np.random.default_rng([cfg.seed, 43])
    combos = list(pair.tangent.generators())
    gens = pair.tangent.generators()
    for _ in range(4):
        if len(gens) == 0:
            break
        w = rng.random(len(gens))
        combos.append((w @ gens) / max(1e-12, np.linalg.norm(w @ gens)))
    for v in combos:
        est = upper_subderivative(f, v, cfg, tol)
        value = None if est.value is None else est.value.to_json()
        ok = None
        if est.value is not None:
            ok = bool(est.is_pos_inf or (est.is_finite and est.value.value >= -est.error_bar - 10 * tol.abs_tol))
            if est.is_neg_inf:
                ok = False
        if ok is False:
            ok_dirs = False
        directional.append({"direction": np.asarray(v).tolist(), "estimate": value,
                            "error_bar": est.error_bar, "nonnegative": ok})
    holds = bool(cert.holds and ok_dirs)
    decomposition = None
    if cert.holds:
        decomposition = {
            "xi": cert.xi.tolist(),
            "w": cert.w.tolist(),
            "residual": float(np.linalg.norm(cert.xi + cert.w)),
        }
    return OptimalityCertificate(
        condition="constrained_infinity",
        holds=holds,
        status="holds" if holds else "fails",
        reason=f"minkowski membership {'feasible' if cert.holds else 'infeasible'}; "
               f"directional checks {'pass' if ok_dirs else 'fail'}",
        decomposition=decomposition,
        directional_check=directional,
        subgradients=sub.to_json(),
        qualification=qual,
    )
