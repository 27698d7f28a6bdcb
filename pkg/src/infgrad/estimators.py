"""Deterministic sampling ladders for every limsup/liminf quantity at infinity.

The limits "x -> inf, t -> 0, eps -> 0" are discretized on ladders of
radii, steps and ball radii from :class:`LadderConfig`.  A limsup over a
region becomes a max over low-discrepancy shell samples plus the axis
points; sampling is seeded per rung so reruns are byte-identical.  Results
carry per-rung tables, a trend classification and an error bar; divergence
to +/-inf is only declared after monotone growth by a factor of 10 across
at least three rungs.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, List, Optional, Sequence, Tuple

import numpy as np

from .errors import DimensionMismatchError, EstimateUnavailableError
from .extreal import ExtendedReal
from .functions import FuncDesc, SetDesc, distance_batch, project_batch
from .geometry import DEFAULT_TOL, Tolerance

GROWTH_THRESHOLD = 1e6

# difference quotients at radius R and step t carry cancellation noise of
# order eps_machine * R / t; steps below this floor are skipped per rung
_STEP_FLOOR_FACTOR = 1e-8


def _usable_steps(steps: Sequence[float], radius: float) -> List[float]:
    floor = _STEP_FLOOR_FACTOR * max(1.0, radius)
    out = [t for t in steps if t >= floor]
    return out if out else [steps[0]]


@dataclass(frozen=True)
class LadderConfig:
    """Radius/step/ball ladders driving every estimator."""

    radii: Tuple[float, ...] = (1e1, 1e2, 1e3, 1e4, 1e5, 1e6)
    steps: Tuple[float, ...] = (1e-1, 1e-2, 1e-3, 1e-4, 1e-5, 1e-6)
    eps_ball: Tuple[float, ...] = (1.0, 0.3, 0.1, 0.03)
    samples_per_shell: int = 256
    seed: int = 0

    def __post_init__(self):
        if any(b <= a for a, b in zip(self.radii, self.radii[1:])) or not self.radii:
            raise ValueError("radii must be strictly increasing and nonempty")
        if any(b >= a for a, b in zip(self.steps, self.steps[1:])) or not self.steps:
            raise ValueError("steps must be strictly decreasing and nonempty")
        if any(b >= a for a, b in zip(self.eps_ball, self.eps_ball[1:])) or not self.eps_ball:
            raise ValueError("eps_ball must be strictly decreasing and nonempty")
        if self.samples_per_shell <= 0:
            raise ValueError("samples_per_shell must be positive")

    def to_json(self) -> dict:
        return {
            "radii": list(self.radii),
            "steps": list(self.steps),
            "eps": list(self.eps_ball),
            "samples": self.samples_per_shell,
            "seed": self.seed,
        }

    @classmethod
    def from_json(cls, obj: dict) -> "LadderConfig":
        return cls(
            radii=tuple(obj.get("radii", cls.radii)),
            steps=tuple(obj.get("steps", cls.steps)),
            eps_ball=tuple(obj.get("eps", cls.eps_ball)),
            samples_per_shell=int(obj.get("samples", cls.samples_per_shell)),
            seed=int(obj.get("seed", cls.seed)),
        )


DEFAULT_LADDER = LadderConfig()


@dataclass(frozen=True)
class IndexSet:
    """1-based coordinate subset defining the projection pi."""

    coords: Tuple[int, ...]

    def __post_init__(self):
        if not self.coords:
            raise ValueError("index set must be nonempty")
        object.__setattr__(self, "coords", tuple(sorted(set(int(c) for c in self.coords))))
        if self.coords[0] < 1:
            raise ValueError("coordinates are 1-based")

    @classmethod
    def all(cls, n: int) -> "IndexSet":
        return cls(tuple(range(1, n + 1)))

    def indices(self) -> np.ndarray:
        return np.array(self.coords, dtype=int) - 1

    def project(self, X: np.ndarray) -> np.ndarray:
        X = np.asarray(X, dtype=float)
        return X[..., self.indices()]


@dataclass
class LimitEstimate:
    """Outcome of one ladder scan.

    ``value`` is None exactly when ``trend == 'oscillating'`` (the value is
    withheld rather than guessed).
    """

    value: Optional[ExtendedReal]
    trend: str  # converged | diverging_up | diverging_down | oscillating
    rung_values: List[dict] = field(default_factory=list)
    error_bar: float = 0.0

    @property
    def is_finite(self) -> bool:
        return self.value is not None and self.value.is_finite

    @property
    def is_pos_inf(self) -> bool:
        return self.value is not None and self.value.is_pos_inf

    @property
    def is_neg_inf(self) -> bool:
        return self.value is not None and self.value.is_neg_inf

    def to_json(self) -> dict:
        return {
            "value": None if self.value is None else self.value.to_json(),
            "trend": self.trend,
            "rung_values": self.rung_values,
            "error_bar": self.error_bar,
        }


# ---------------------------------------------------------------------------
# Deterministic sampling helpers
# ---------------------------------------------------------------------------


def _unit_directions(dim: int, count: int, seed_key: Sequence[int]) -> np.ndarray:
    """Axis directions plus seeded low-discrepancy sphere samples."""
    eye = np.eye(dim)
    dirs = [eye[i] for i in range(dim)] + [-eye[i] for i in range(dim)]
    if dim == 1:
        return np.array(dirs)
    extra = max(count - len(dirs), 0)
    if extra:
        rng = np.random.default_rng(list(seed_key))
        g = rng.standard_normal((extra, dim))
        g /= np.linalg.norm(g, axis=1, keepdims=True)
        dirs.extend(g)
    return np.array(dirs)


def shell_points(dim: int, radius: float, count: int, seed: int, rung: int) -> np.ndarray:
    """Points on the sphere of the given radius.

    The direction pattern is shared across rungs (only the radius varies),
    so rung-to-rung differences isolate the radius effect instead of
    sampling noise.
    """
    return radius * _unit_directions(dim, count, (seed, 11))


def ball_grid(v: np.ndarray, eps: float, seed: int, rung: int, extra: int = 16) -> np.ndarray:
    """Center, the 2n axis extremes, and seeded sphere samples of B_eps(v)."""
    v = np.asarray(v, dtype=float)
    n = len(v)
    pts = [v]
    eye = np.eye(n)
    for i in range(n):
        pts.append(v + eps * eye[i])
        pts.append(v - eps * eye[i])
    if n > 1 and extra > 0:
        rng = np.random.default_rng([seed, 13])
        g = rng.standard_normal((extra, n))
        g /= np.linalg.norm(g, axis=1, keepdims=True)
        pts.extend(v + eps * g)
    return np.array(pts)


def set_shell_points(
    C: SetDesc,
    I: IndexSet,
    radius: float,
    count: int,
    seed: int,
    rung: int,
    keep_fraction: float = 0.7,
) -> np.ndarray:
    """Sampled points of C with large pi-norm.

    Ambient seeds put the I-coordinates on the radius sphere and the rest
    uniformly in [-R, R]; seeds are projected onto C and survivors whose
    pi-norm stayed above ``keep_fraction * radius`` are returned.
    """
    idx = I.indices()
    if np.max(idx) >= C.dim:
        raise DimensionMismatchError("index set exceeds the set's dimension")
    k = len(idx)
    comp = np.array([i for i in range(C.dim) if i not in set(idx)], dtype=int)

    # epigraph sets with the standard index set: walk the graph directly,
    # which reaches the thin zones ambient projections miss
    fsrc = getattr(C, "_epigraph_of", None)
    if fsrc is not None and tuple(I.coords) == tuple(range(1, fsrc.dim + 1)):
        return _epigraph_shell_points(fsrc, radius, count, seed)

    dirs = _unit_directions(k, count, (seed, 17))
    pi_parts = [radius * d for d in dirs]
    # axis points carrying a fixed moderate offset in another pi coordinate:
    # far sets often hide their binding behaviour in such thin zones (for an
    # epigraph of exp(x1) + x2, the points with moderate x1 and huge x2)
    if k >= 2:
        eye = np.eye(k)
        for i in range(k):
            for j in range(k):
                if i == j:
                    continue
                for c in (1.0, 5.0, 25.0):
                    for si in (1.0, -1.0):
                        for sj in (1.0, -1.0):
                            pi_parts.append(radius * si * eye[i] + c * sj * eye[j])
    pi_parts = np.array(pi_parts)

    # complementary-coordinate patterns: zero, +/-R on each axis, random draws
    comp_patterns = [np.zeros(len(comp))]
    for j in range(len(comp)):
        for s in (1.0, -1.0):
            pat = np.zeros(len(comp))
            pat[j] = s * radius
            comp_patterns.append(pat)
    rng = np.random.default_rng([seed, rung, 19])
    exact_projection = C.kind == "polyhedral" or C.is_piecewise_polyhedral
    reps = max(2, min(8, count // max(len(pi_parts), 1))) if len(comp) else 0
    for _ in range(reps):
        comp_patterns.append(rng.uniform(-radius, radius, len(comp)))
    if not len(comp):
        comp_patterns = [np.zeros(0)]

    seeds = []
    for p in pi_parts:
        for cp in comp_patterns:
            z = np.zeros(C.dim)
            z[idx] = p
            if len(comp):
                z[comp] = cp
            seeds.append(z)
    Z = np.array(seeds)
    max_seeds = 4 * count if exact_projection else 2 * count
    if len(Z) > max_seeds:
        Z = Z[:max_seeds]
    starts = 1 if exact_projection else 4
    P = project_batch(C, Z, starts=starts)
    good = ~np.any(np.isnan(P), axis=1)
    P = P[good]
    if len(P) == 0:
        return P.reshape(0, C.dim)
    pi_norm = np.linalg.norm(P[:, idx], axis=1)
    member = C.membership_batch(P, tol=1e-6 * max(1.0, radius))
    P = P[(pi_norm >= keep_fraction * radius) & member]
    if len(P) == 0:
        return P.reshape(0, C.dim)
    # dedupe on a coarse grid to avoid wasting work on clustered projections
    keys = np.round(P / (1e-6 * max(1.0, radius)), 0)
    _, uniq = np.unique(keys, axis=0, return_index=True)
    return P[np.sort(uniq)]


def _epigraph_shell_points(f, radius: float, count: int, seed: int) -> np.ndarray:
    """(x, f(x) + offset) samples with x on the radius sphere plus
    axis-with-offset patterns; exact boundary points for offset 0."""
    n = f.dim
    dirs = _unit_directions(n, count, (seed, 17))
    parts = [radius * d for d in dirs]
    if n >= 2:
        eye = np.eye(n)
        for i in range(n):
            for j in range(n):
                if i == j:
                    continue
                for c in (1.0, 5.0, 25.0):
                    for si in (1.0, -1.0):
                        for sj in (1.0, -1.0):
                            parts.append(radius * si * eye[i] + c * sj * eye[j])
    X = np.array(parts)
    with np.errstate(all="ignore"):
        y = f.eval_batch(X)
    ok = np.isfinite(y)
    X, y = X[ok], y[ok]
    if len(X) == 0:
        return np.zeros((0, n + 1))
    pts = []
    for off in (0.0, 1.0):
        pts.append(np.hstack([X, (y + off)[:, None]]))
    return np.vstack(pts)


# ---------------------------------------------------------------------------
# Trend classification
# ---------------------------------------------------------------------------


def _grows_up(a: float, b: float) -> bool:
    if math.isinf(b) and b > 0:
        return True
    if math.isinf(a) and a > 0:
        return False
    if b <= a:
        return False
    if a <= 0:
        return b >= abs(a) and b > 0
    return b >= 10.0 * a


def _classify(values: List[float], tol: Tolerance) -> Tuple[str, Optional[float]]:
    """Trend over rung values (finite floats or +/-inf, invalid rungs removed)."""
    vals = [v for v in values if not math.isnan(v)]
    if not vals:
        raise EstimateUnavailableError("every rung was invalid")
    if len(vals) == 1:
        v = vals[0]
        if math.isfinite(v):
            return "converged", v
        return ("diverging_up", v) if v > 0 else ("diverging_down", v)
    last, prev = vals[-1], vals[-2]
    if math.isfinite(last) and math.isfinite(prev):
        if abs(last - prev) < max(tol.abs_tol, tol.rel_tol * abs(last)):
            return "converged", last
    if len(vals) >= 3:
        tail = vals[-3:]
        if all(_grows_up(a, b) for a, b in zip(tail, tail[1:])):
            if math.isinf(tail[-1]) or tail[-1] >= GROWTH_THRESHOLD:
                return "diverging_up", math.inf
        neg = [-v for v in tail]
        if all(_grows_up(a, b) for a, b in zip(neg, neg[1:])):
            if math.isinf(neg[-1]) or neg[-1] >= GROWTH_THRESHOLD:
                return "diverging_down", -math.inf
    # saturated at +/-inf without a growth run
    if all(math.isinf(v) and v > 0 for v in vals[-2:]):
        return "diverging_up", math.inf
    if all(math.isinf(v) and v < 0 for v in vals[-2:]):
        return "diverging_down", -math.inf
    return "oscillating", None


def _finish(trend: str, value: Optional[float], rung_rows: List[dict], bar: float) -> LimitEstimate:
    val = None if value is None else ExtendedReal(value)
    return LimitEstimate(value=val, trend=trend, rung_values=rung_rows, error_bar=bar)


# ---------------------------------------------------------------------------
# Subderivative-style estimators
# ---------------------------------------------------------------------------


def _quotient_scan(
    f: FuncDesc,
    v: np.ndarray,
    cfg: LadderConfig,
    eps_for_rung: Callable[[int], Optional[float]],
    inner: str,
) -> Tuple[List[float], List[bool]]:
    """Max over shells x steps of the difference quotient, per radius rung.

    ``inner`` is 'inf' (minimize over the ball grid), 'sup' (maximize) or
    'none' (step along v only).  NaN marks an invalid rung.  The second
    return value flags rungs that lost shell samples to infinite f values
    (genuinely infinite, or float overflow).
    """
    n = f.dim
    v = np.asarray(v, dtype=float)
    out_row: List[float] = []
    saturated: List[bool] = []
    for k, R in enumerate(cfg.radii):
        X = shell_points(n, R, cfg.samples_per_shell, cfg.seed, k)
        with np.errstate(all="ignore"):
            fX = f.eval_batch(X)
        valid = np.isfinite(fX)
        saturated.append(bool(np.any(np.isinf(fX))))
        if not np.any(valid):
            out_row.append(math.nan)
            continue
        X, fX = X[valid], fX[valid]
        if inner == "none":
            W = v[None, :]
        else:
            W = ball_grid(v, eps_for_rung(k), cfg.seed, k)
        best = -math.inf
        saw_value = False
        for t in _usable_steps(cfg.steps, R):
            Y = (X[:, None, :] + t * W[None, :, :]).reshape(-1, n)
            with np.errstate(all="ignore"):
                fY = f.eval_batch(Y).reshape(len(X), len(W))
                Q = (fY - fX[:, None]) / t
                # fX is finite here, so numpy arithmetic already matches the
                # +inf-dominant convention for f(y) - f(x)
            bad = np.isnan(Q)
            if inner == "inf":
                Qm = np.where(bad, math.inf, Q)
                rowvals = np.min(Qm, axis=1)
                rowvals[np.all(bad, axis=1)] = math.nan
            elif inner == "sup":
                Qm = np.where(bad, -math.inf, Q)
                rowvals = np.max(Qm, axis=1)
                rowvals[np.all(bad, axis=1)] = math.nan
            else:
                rowvals = Q[:, 0]
            rowvals = rowvals[~np.isnan(rowvals)]
            if len(rowvals):
                saw_value = True
                best = max(best, float(np.max(rowvals)))
        out_row.append(best if saw_value else math.nan)
    return out_row, saturated


def _classify_saturated(values: List[float], saturated: List[bool], tol: Tolerance) -> Tuple[str, Optional[float]]:
    """Trend classification that recognises overflow-truncated divergence.

    When shells start losing samples to infinite f values, the valid prefix
    decides: a monotone run already past the growth threshold upgrades the
    verdict to divergence even though later rungs look flat.
    """
    trend, value = _classify(values, tol)
    first_sat = next((i for i, s in enumerate(saturated) if s), None)
    if first_sat is None or trend in ("diverging_up", "diverging_down"):
        return trend, value
    prefix = [v for v in values[:first_sat] if not math.isnan(v)]
    if not prefix:
        return trend, value
    if all(_grows_up(a, b) for a, b in zip(prefix, prefix[1:])) and prefix[-1] >= GROWTH_THRESHOLD:
        return "diverging_up", math.inf
    neg = [-v for v in prefix]
    if all(_grows_up(a, b) for a, b in zip(neg, neg[1:])) and neg[-1] >= GROWTH_THRESHOLD:
        return "diverging_down", -math.inf
    return trend, value


def upper_subderivative(
    f: FuncDesc,
    v,
    cfg: LadderConfig = DEFAULT_LADDER,
    tol: Tolerance = DEFAULT_TOL,
) -> LimitEstimate:
    """Ladder estimate of the upper subderivative at infinity along v.

    Inner infimum over a deterministic grid of the shrinking ball around v,
    middle limsup as a max over shell samples x steps per radius rung, outer
    limit across the eps ladder with linear-in-eps extrapolation.
    """
    v = np.asarray(v, dtype=float).ravel()
    if v.shape != (f.dim,):
        raise DimensionMismatchError("direction dimension mismatch")
    rows = []
    per_eps: List[Tuple[float, str, Optional[float], float]] = []
    for eps in cfg.eps_ball:
        vals, sat = _quotient_scan(f, v, cfg, lambda k, eps=eps: eps, inner="inf")
        trend, value = _classify_saturated(vals, sat, tol)
        finite_two = [x for x in vals if not math.isnan(x) and math.isfinite(x)][-2:]
        spread = abs(finite_two[-1] - finite_two[0]) if len(finite_two) == 2 else 0.0
        per_eps.append((eps, trend, value, spread))
        rows.append({"eps": eps, "values": [None if math.isnan(x) else _jsonf(x) for x in vals],
                     "trend": trend})
    eps_last, trend, value, spread = per_eps[-1]
    if trend == "oscillating" or value is None:
        return _finish("oscillating", None, rows, math.inf)
    if math.isinf(value):
        return _finish(trend, value, rows, 0.0)
    # linear extrapolation of the eps limit from the last two converged rungs
    bar = spread + tol.abs_tol
    extr = value
    if len(per_eps) >= 2:
        eps_prev, trend_prev, value_prev, _ = per_eps[-2]
        if trend_prev == "converged" and value_prev is not None and math.isfinite(value_prev):
            slope = (value - value_prev) / (eps_last - eps_prev)
            extr = value - slope * eps_last
            bar += abs(extr - value)
    return _finish("converged", extr, rows, bar)


def dagger_derivative(
    f: FuncDesc,
    v,
    cfg: LadderConfig = DEFAULT_LADDER,
    tol: Tolerance = DEFAULT_TOL,
) -> LimitEstimate:
    """Ladder estimate of the joint limsup with w -> v (directional-Lipschitz
    test quantity): sup over shell x steps x a shrinking w-ball per rung."""
    v = np.asarray(v, dtype=float).ravel()
    if v.shape != (f.dim,):
        raise DimensionMismatchError("direction dimension mismatch")

    def eps_for(k: int) -> float:
        return cfg.eps_ball[min(k, len(cfg.eps_ball) - 1)]

    vals, sat = _quotient_scan(f, v, cfg, eps_for, inner="sup")
    trend, value = _classify_saturated(vals, sat, tol)
    rows = [{"radius": R, "eps": eps_for(k), "value": None if math.isnan(x) else _jsonf(x)}
            for k, (R, x) in enumerate(zip(cfg.radii, vals))]
    if value is None:
        return _finish(trend, None, rows, math.inf)
    bar = cfg.eps_ball[-1] * (1.0 + abs(value) if math.isfinite(value) else 1.0)
    finite_two = [x for x in vals if not math.isnan(x) and math.isfinite(x)][-2:]
    if len(finite_two) == 2:
        bar += abs(finite_two[-1] - finite_two[0])
    return _finish(trend, value, rows, bar)


def clarke_derivative_at_infinity(
    f: FuncDesc,
    v,
    cfg: LadderConfig = DEFAULT_LADDER,
    tol: Tolerance = DEFAULT_TOL,
) -> LimitEstimate:
    """Ladder estimate of limsup of [f(x + t v) - f(x)] / t as x -> inf, t -> 0."""
    v = np.asarray(v, dtype=float).ravel()
    if v.shape != (f.dim,):
        raise DimensionMismatchError("direction dimension mismatch")
    vals, sat = _quotient_scan(f, v, cfg, lambda k: None, inner="none")
    trend, value = _classify_saturated(vals, sat, tol)
    rows = [{"radius": R, "value": None if math.isnan(x) else _jsonf(x)}
            for R, x in zip(cfg.radii, vals)]
    if value is None:
        return _finish(trend, None, rows, math.inf)
    bar = tol.abs_tol
    finite_two = [x for x in vals if not math.isnan(x) and math.isfinite(x)][-2:]
    if len(finite_two) == 2:
        bar += abs(finite_two[-1] - finite_two[0])
    return _finish(trend, value, rows, bar)


def _jsonf(x: float):
    if math.isinf(x):
        return "+inf" if x > 0 else "-inf"
    return x


# ---------------------------------------------------------------------------
# Set-side estimators
# ---------------------------------------------------------------------------


@dataclass
class TangentVerdict:
    status: str  # member | nonmember | inconclusive
    witness: dict = field(default_factory=dict)


def _collect_shells(C: SetDesc, I: IndexSet, cfg: LadderConfig) -> List[np.ndarray]:
    key = (I.coords, cfg.radii, cfg.samples_per_shell, cfg.seed)
    cache = getattr(C, "_shell_cache", None)
    if cache is None:
        cache = {}
        C._shell_cache = cache
    if key in cache:
        return cache[key]
    exact = C.kind == "polyhedral" or C.is_piecewise_polyhedral
    count = cfg.samples_per_shell if exact else min(24, cfg.samples_per_shell)
    shells = []
    for k, R in enumerate(cfg.radii):
        shells.append(set_shell_points(C, I, R, count, cfg.seed, k))
    cache[key] = shells
    return shells


def _require_unbounded(shells: List[np.ndarray], C: SetDesc):
    if all(len(s) == 0 for s in shells[-2:]):
        raise EstimateUnavailableError(
            "no feasible far points found: the projection of the set appears bounded"
        )


def _projection_noise(C: SetDesc) -> float:
    """Noise floor of sampled shell points relative to the true boundary."""
    if C.kind == "polyhedral" or C.is_piecewise_polyhedral:
        return 1e-9
    return 1e-5  # local SLSQP projections


def tangent_membership(
    C: SetDesc,
    v,
    I: Optional[IndexSet] = None,
    cfg: LadderConfig = DEFAULT_LADDER,
    tol: Tolerance = DEFAULT_TOL,
) -> TangentVerdict:
    """Sampled membership test for the tangent cone at infinity.

    Searches for far points x in C and small t where C misses the ball
    x + t B_eps(v); a fully passing (eps, R, lambda) schedule at every eps
    rung yields 'member', a falsification at the smallest eps yields
    'nonmember' with the witness, anything else is 'inconclusive'.
    """
    v = np.asarray(v, dtype=float).ravel()
    I = I or IndexSet.all(C.dim)
    if v.shape != (C.dim,):
        raise DimensionMismatchError("direction dimension mismatch")
    shells = _collect_shells(C, I, cfg)
    _require_unbounded(shells, C)

    n_r, n_t = len(cfg.radii), len(cfg.steps)
    noise = _projection_noise(C)
    pass_stats = []
    verdicts = []
    witness: dict = {}
    for eps in cfg.eps_ball:
        # usable steps: the ball radius t*eps must dominate projection noise
        usable = [jt for jt, t in enumerate(cfg.steps) if t * eps >= 10 * noise]
        if not usable:
            usable = [0]
        ok = np.ones((n_r, n_t), dtype=bool)
        worst = None
        for ii in range(n_r):
            pts = shells[ii]
            if len(pts) == 0:
                continue
            # base residual of the sampled points themselves (local smooth
            # projections may sit marginally off the boundary)
            d0 = distance_batch(C, pts)
            for jt in usable:
                t = cfg.steps[jt]
                d = distance_batch(C, pts + t * v)
                slack = d - d0 - (t * eps + noise * (1.0 + cfg.radii[ii] * 1e-6))
                bad = int(np.argmax(slack))
                if slack[bad] > 0:
                    ok[ii, jt] = False
                    if worst is None or eps == cfg.eps_ball[-1]:
                        worst = {"x": pts[bad].tolist(), "t": t, "eps": eps,
                                 "distance": float(d[bad]), "allowed": float(t * eps)}
        passed = any(
            all(ok[ii, jt] for ii in range(i, n_r) for jt in usable if jt >= j)
            for i in range(n_r)
            for j in usable
        )
        verdicts.append(passed)
        pass_stats.append({"eps": eps, "passed": passed})
        if not passed and eps == cfg.eps_ball[-1] and worst:
            witness = worst
    if all(verdicts):
        return TangentVerdict("member", {"rungs": pass_stats})
    if not verdicts[-1]:
        return TangentVerdict("nonmember", {"rungs": pass_stats, **witness})
    return TangentVerdict("inconclusive", {"rungs": pass_stats})


def interior_tangent_test(
    C: SetDesc,
    v,
    I: Optional[IndexSet] = None,
    cfg: LadderConfig = DEFAULT_LADDER,
    tol: Tolerance = DEFAULT_TOL,
) -> str:
    """Sampled interior test: looks for (eps, R, lambda) with x + t v' in C
    for every sampled far x, small t and v' in B_eps(v).  Returns
    'interior', 'not_interior' or 'inconclusive'."""
    v = np.asarray(v, dtype=float).ravel()
    I = I or IndexSet.all(C.dim)
    if v.shape != (C.dim,):
        raise DimensionMismatchError("direction dimension mismatch")
    shells = _collect_shells(C, I, cfg)
    _require_unbounded(shells, C)
    n_r, n_t = len(cfg.radii), len(cfg.steps)
    if not any(len(s) for s in shells):
        return "inconclusive"
    noise = _projection_noise(C)

    def violations(X: np.ndarray) -> np.ndarray:
        """Per-point, per-constraint positive violation amounts."""
        vals = C.constraint_values(X)
        cols = []
        for ci, (_, rel, const) in enumerate(C.constraints):
            g = vals[:, ci]
            if rel == "<=":
                cols.append(np.maximum(g - const, 0.0))
            elif rel == ">=":
                cols.append(np.maximum(const - g, 0.0))
            else:
                cols.append(np.abs(g - const))
        return np.stack(cols, axis=1)

    for eps in cfg.eps_ball:
        ok = np.ones((n_r, n_t), dtype=bool)
        for ii in range(n_r):
            pts = shells[ii]
            if len(pts) == 0:
                continue
            W = ball_grid(v, eps, cfg.seed, ii)
            base = violations(pts)  # allowance: steps need not repair the
            # sampled points' own residual off the boundary
            slack = noise * (1.0 + cfg.radii[ii] * 1e-6)
            for jt, t in enumerate(cfg.steps):
                Y = (pts[:, None, :] + t * W[None, :, :]).reshape(-1, C.dim)
                viol = violations(Y).reshape(len(pts), len(W), -1)
                allowed = base[:, None, :] + slack + 0.05 * t * eps
                ok[ii, jt] = bool(np.all(viol <= allowed))
        for i in range(n_r):
            for j in range(n_t):
                if all(ok[ii, jt] for ii in range(i, n_r) for jt in range(j, n_t)):
                    return "interior"
    return "not_interior"


@dataclass
class DistanceCharacterization:
    estimate: LimitEstimate
    verdict: str  # zero | positive | inconclusive


def distance_characterization(
    C: SetDesc,
    v,
    cfg: LadderConfig = DEFAULT_LADDER,
    tol: Tolerance = DEFAULT_TOL,
    I: Optional[IndexSet] = None,
) -> DistanceCharacterization:
    """Ladder estimate of the far-field derivative of the distance function
    along v; its zero-vs-positive verdict is an independent oracle for
    tangent-cone membership."""
    v = np.asarray(v, dtype=float).ravel()
    I = I or IndexSet.all(C.dim)
    if v.shape != (C.dim,):
        raise DimensionMismatchError("direction dimension mismatch")
    shells = _collect_shells(C, I, cfg)
    _require_unbounded(shells, C)
    vals = []
    for k, R in enumerate(cfg.radii):
        base = shells[k]
        if len(base) == 0:
            vals.append(math.nan)
            continue
        delta = cfg.steps[min(k, len(cfg.steps) - 1)]
        U = _unit_directions(C.dim, 8, (cfg.seed, k, 23))
        X = (base[:, None, :] + delta * U[None, :, :]).reshape(-1, C.dim)
        dX = distance_batch(C, X)
        best = -math.inf
        for t in _usable_steps(cfg.steps, R):
            dY = distance_batch(C, X + t * v)
            q = (dY - dX) / t
            q = q[~np.isnan(q)]
            if len(q):
                best = max(best, float(np.max(q)))
        vals.append(best)
    trend, value = _classify(vals, tol)
    rows = [{"radius": R, "value": None if math.isnan(x) else _jsonf(x)} for R, x in zip(cfg.radii, vals)]
    finite_two = [x for x in vals if not math.isnan(x) and math.isfinite(x)][-2:]
    bar = (abs(finite_two[-1] - finite_two[0]) if len(finite_two) == 2 else 0.0) + tol.abs_tol
    est = _finish(trend, value, rows, bar)
    if value is None:
        verdict = "inconclusive"
    elif math.isfinite(value) and value < 0.05:
        verdict = "zero"
    elif value >= 0.05:
        verdict = "positive"
    else:
        verdict = "inconclusive"
    return DistanceCharacterization(est, verdict)
