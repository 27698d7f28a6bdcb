"""Exact polyhedral geometry in low dimension.

Cones are stored in V-representation (unit rays + lineality directions),
convex sets as vertices + recession rays.  Polar computation and cone/
polyhedron slicing go through facet-style enumeration, which is exact but
capped at ambient dimension 4; higher dimensions must use the sampled
estimators instead.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from typing import Iterable, List, Optional, Sequence, Tuple, Union

import numpy as np
from scipy.optimize import linprog

from .errors import CapabilityError, DimensionMismatchError
from .extreal import NEG_INF, POS_INF, ExtendedReal

MAX_EXACT_DIM = 4

_ROUND = 9  # decimals used for canonical ordering keys


@dataclass(frozen=True)
class Tolerance:
    """Comparison tolerances shared by the geometric predicates."""

    abs_tol: float = 1e-6
    rel_tol: float = 1e-6
    cone_angle_tol: float = 1e-6

    def __post_init__(self):
        if self.abs_tol <= 0 or self.rel_tol <= 0 or self.cone_angle_tol <= 0:
            raise ValueError("tolerances must be strictly positive")


DEFAULT_TOL = Tolerance()


def _as_matrix(vs: Iterable, dim: int) -> np.ndarray:
    arr = np.asarray(list(vs), dtype=float)
    if arr.size == 0:
        return np.zeros((0, dim))
    if arr.ndim == 1:
        arr = arr.reshape(1, -1)
    if arr.shape[1] != dim:
        raise DimensionMismatchError(f"expected vectors of dimension {dim}, got {arr.shape[1]}")
    return arr


def _canonical_rows(rows: np.ndarray) -> np.ndarray:
    """Sort rows lexicographically on rounded entries, drop duplicates."""
    if len(rows) == 0:
        return rows
    keys = [tuple(np.round(r, _ROUND)) for r in rows]
    order = sorted(range(len(rows)), key=lambda i: keys[i])
    out, seen = [], set()
    for i in order:
        if keys[i] not in seen:
            seen.add(keys[i])
            out.append(rows[i])
    return np.array(out)


def _unit(v: np.ndarray) -> Optional[np.ndarray]:
    n = np.linalg.norm(v)
    if n < 1e-12:
        return None
    return v / n


def _canonical_sign(v: np.ndarray) -> np.ndarray:
    for x in v:
        if abs(x) > 1e-12:
            return v if x > 0 else -v
    return v


def _nullspace(A: np.ndarray, rcond: float = 1e-9) -> np.ndarray:
    """Orthonormal nullspace basis, columns. A may have zero rows."""
    n = A.shape[1]
    if A.shape[0] == 0:
        return np.eye(n)
    u, s, vt = np.linalg.svd(A)
    rank = int(np.sum(s > rcond * max(A.shape) * (s[0] if len(s) else 1.0)))
    return vt[rank:].T


def _orth_complement(B: np.ndarray, dim: int) -> np.ndarray:
    """Orthonormal basis (columns) of the complement of span(columns of B)."""
    if B.shape[1] == 0:
        return np.eye(dim)
    return _nullspace(B.T)


class PolyCone:
    """Closed convex polyhedral cone ``cone(rays) + span(lineality)``."""

    def __init__(self, dim: int, rays: Iterable = (), lineality: Iterable = ()):
        self.dim = int(dim)
        raw_rays = _as_matrix(rays, self.dim)
        raw_lin = _as_matrix(lineality, self.dim)

        # Orthonormalize the lineality space, then strip its component from rays.
        if raw_lin.shape[0]:
            u, s, _ = np.linalg.svd(raw_lin.T, full_matrices=False)
            rank = int(np.sum(s > 1e-9 * max(1.0, s[0] if len(s) else 1.0)))
            lin = u[:, :rank].T
        else:
            lin = np.zeros((0, self.dim))
        lin = np.array([_canonical_sign(r) for r in lin]) if len(lin) else lin
        self.lineality = _canonical_rows(lin)

        proj = np.eye(self.dim)
        for l in self.lineality:
            proj = proj - np.outer(l, l)
        units = []
        for r in raw_rays:
            r2 = proj @ r
            u2 = _unit(r2)
            if u2 is not None:
                units.append(u2)
        rays_arr = np.array(units) if units else np.zeros((0, self.dim))
        self.rays = _canonical_rows(rays_arr)

    # -- queries --------------------------------------------------------

    @property
    def is_trivial(self) -> bool:
        """True when the cone is exactly {0}."""
        return len(self.rays) == 0 and len(self.lineality) == 0

    def generators(self) -> np.ndarray:
        """Rays plus ± lineality directions: a conic generating system."""
        gens = [r for r in self.rays]
        for l in self.lineality:
            gens.append(l)
            gens.append(-l)
        return np.array(gens) if gens else np.zeros((0, self.dim))

    def contains(self, x, tol: Tolerance = DEFAULT_TOL) -> bool:
        x = np.asarray(x, dtype=float)
        if x.shape != (self.dim,):
            raise DimensionMismatchError("point dimension mismatch")
        if np.linalg.norm(x) <= tol.abs_tol:
            return True
        return _conic_distance(self.generators(), x) <= max(tol.abs_tol, tol.cone_angle_tol * np.linalg.norm(x))

    def to_json(self) -> dict:
        return {"rays": self.rays.tolist(), "lineality": self.lineality.tolist()}

    @classmethod
    def from_json(cls, obj: dict, dim: Optional[int] = None) -> "PolyCone":
        rays = obj.get("rays", [])
        lin = obj.get("lineality", [])
        if dim is None:
            if rays:
                dim = len(rays[0])
            elif lin:
                dim = len(lin[0])
            else:
                dim = obj.get("dim", 1)
        return cls(dim, rays, lin)

    def __repr__(self) -> str:
        return f"PolyCone(dim={self.dim}, rays={self.rays.tolist()}, lineality={self.lineality.tolist()})"


class PolyConvexSet:
    """Closed convex set ``co(vertices) + cone(rays)``; empty iff no vertices."""

    def __init__(self, dim: int, vertices: Iterable = (), rays: Iterable = ()):
        self.dim = int(dim)
        self.vertices = _canonical_rows(_as_matrix(vertices, self.dim))
        units = []
        for r in _as_matrix(rays, self.dim):
            u = _unit(r)
            if u is not None:
                units.append(u)
        self.rays = _canonical_rows(np.array(units) if units else np.zeros((0, self.dim)))

    @property
    def is_empty(self) -> bool:
        return len(self.vertices) == 0

    @property
    def is_bounded(self) -> bool:
        return len(self.rays) == 0

    def recession_cone(self) -> PolyCone:
        return PolyCone(self.dim, self.rays)

    def contains(self, x, tol: Tolerance = DEFAULT_TOL) -> bool:
        if self.is_empty:
            return False
        x = np.asarray(x, dtype=float)
        return _member_distance(self.vertices, self.rays, x) <= tol.abs_tol

    def distance_to(self, x) -> float:
        """L-infinity distance from x to the set (LP); +inf when empty."""
        if self.is_empty:
            return math.inf
        return _member_distance(self.vertices, self.rays, np.asarray(x, dtype=float))

    def to_json(self) -> dict:
        return {"vertices": self.vertices.tolist(), "rays": self.rays.tolist()}

    @classmethod
    def from_json(cls, obj: dict, dim: Optional[int] = None) -> "PolyConvexSet":
        verts = obj.get("vertices", [])
        rays = obj.get("rays", [])
        if dim is None:
            if verts:
                dim = len(verts[0])
            elif rays:
                dim = len(rays[0])
            else:
                dim = obj.get("dim", 1)
        return cls(dim, verts, rays)

    def __repr__(self) -> str:
        return f"PolyConvexSet(dim={self.dim}, vertices={self.vertices.tolist()}, rays={self.rays.tolist()})"


@dataclass
class MinkowskiCertificate:
    holds: bool
    xi: Optional[np.ndarray] = None
    w: Optional[np.ndarray] = None
    residual: float = math.inf


# ---------------------------------------------------------------------------
# LP work horses
# ---------------------------------------------------------------------------


def _lp(c, A_ub=None, b_ub=None, A_eq=None, b_eq=None, bounds=None):
    res = linprog(c, A_ub=A_ub, b_ub=b_ub, A_eq=A_eq, b_eq=b_eq, bounds=bounds, method="highs")
    return res


def _conic_distance(gens: np.ndarray, x: np.ndarray) -> float:
    """min_t { t : |G^T a - x|_inf <= t, a >= 0 }; inf over the conic hull."""
    m = len(gens)
    n = len(x)
    if m == 0:
        return float(np.max(np.abs(x))) if n else 0.0
    # variables: a (m), t (1)
    c = np.zeros(m + 1)
    c[-1] = 1.0
    A_ub = np.zeros((2 * n, m + 1))
    b_ub = np.zeros(2 * n)
    A_ub[:n, :m] = gens.T
    A_ub[:n, -1] = -1.0
    b_ub[:n] = x
    A_ub[n:, :m] = -gens.T
    A_ub[n:, -1] = -1.0
    b_ub[n:] = -x
    res = _lp(c, A_ub=A_ub, b_ub=b_ub, bounds=[(0, None)] * m + [(0, None)])
    if not res.success:
        return math.inf
    return float(res.fun)


def _member_distance(vertices: np.ndarray, rays: np.ndarray, x: np.ndarray) -> float:
    """min_t { t : |V^T l + R^T a - x|_inf <= t, l in simplex, a >= 0 }."""
    nv, nr, n = len(vertices), len(rays), len(x)
    c = np.zeros(nv + nr + 1)
    c[-1] = 1.0
    A_ub = np.zeros((2 * n, nv + nr + 1))
    b_ub = np.zeros(2 * n)
    top = np.hstack([vertices.T, rays.T]) if nr else vertices.T
    A_ub[:n, : nv + nr] = top
    A_ub[:n, -1] = -1.0
    b_ub[:n] = x
    A_ub[n:, : nv + nr] = -top
    A_ub[n:, -1] = -1.0
    b_ub[n:] = -x
    A_eq = np.zeros((1, nv + nr + 1))
    A_eq[0, :nv] = 1.0
    res = _lp(c, A_ub=A_ub, b_ub=b_ub, A_eq=A_eq, b_eq=[1.0], bounds=[(0, None)] * (nv + nr + 1))
    if not res.success:
        return math.inf
    return float(res.fun)


# ---------------------------------------------------------------------------
# H-representation -> V-representation
# ---------------------------------------------------------------------------


def cone_from_halfspaces(A_ineq: np.ndarray, A_eq: Optional[np.ndarray] = None, dim: Optional[int] = None) -> PolyCone:
    """V-representation of ``{x : A_ineq x <= 0, A_eq x = 0}``.

    Exact extreme-ray enumeration; requires the ambient dimension to be at
    most :data:`MAX_EXACT_DIM`.
    """
    A_ineq = np.asarray(A_ineq, dtype=float)
    if A_ineq.size == 0:
        if dim is None:
            raise ValueError("dimension required when no inequality rows are given")
        A_ineq = np.zeros((0, dim))
    n = A_ineq.shape[1]
    if n > MAX_EXACT_DIM:
        raise CapabilityError(f"exact cone enumeration supports dimension <= {MAX_EXACT_DIM}, got {n}")
    if A_eq is None or np.asarray(A_eq).size == 0:
        A_eq = np.zeros((0, n))
    A_eq = np.asarray(A_eq, dtype=float).reshape(-1, n)

    N = _nullspace(A_eq)  # n x d0
    d0 = N.shape[1]
    if d0 == 0:
        return PolyCone(n)
    A1 = A_ineq @ N
    # drop rows that vanish on the nullspace
    keep = [i for i in range(A1.shape[0]) if np.linalg.norm(A1[i]) > 1e-10]
    A1 = A1[keep] if keep else np.zeros((0, d0))
    if A1.shape[0] == 0:
        return PolyCone(n, rays=(), lineality=N.T)

    L = _nullspace(A1)  # d0 x dl, lineality inside the nullspace coords
    lineality = (N @ L).T if L.shape[1] else np.zeros((0, n))
    B = _orth_complement(L, d0)  # d0 x d
    d = B.shape[1]
    if d == 0:
        return PolyCone(n, rays=(), lineality=lineality)
    A2 = A1 @ B  # m x d, pointed cone {z : A2 z <= 0}

    rays_z: List[np.ndarray] = []
    m = A2.shape[0]
    if d == 1:
        for z in (np.array([1.0]), np.array([-1.0])):
            if np.all(A2 @ z <= 1e-9):
                rays_z.append(z)
    else:
        for rows in itertools.combinations(range(m), d - 1):
            sub = A2[list(rows)]
            ns = _nullspace(sub)
            if ns.shape[1] != 1:
                continue
            z = ns[:, 0]
            for cand in (z, -z):
                if np.all(A2 @ cand <= 1e-9 * max(1.0, float(np.max(np.abs(A2))))):
                    rays_z.append(cand)
                    break
    rays = [N @ (B @ z) for z in rays_z]
    return PolyCone(n, rays=rays, lineality=lineality)


def polyhedron_from_halfspaces(
    A: np.ndarray,
    b: np.ndarray,
    A_eq: Optional[np.ndarray] = None,
    b_eq: Optional[np.ndarray] = None,
) -> PolyConvexSet:
    """V-representation of ``{x : A x <= b, A_eq x = b_eq}`` (dim <= 4).

    Lineality directions of the recession cone are emitted as a +/- ray pair.
    """
    A = np.asarray(A, dtype=float)
    b = np.asarray(b, dtype=float).ravel()
    n = A.shape[1]
    if n > MAX_EXACT_DIM:
        raise CapabilityError(f"exact polyhedron enumeration supports dimension <= {MAX_EXACT_DIM}, got {n}")
    if A_eq is None or np.asarray(A_eq).size == 0:
        A_eq = np.zeros((0, n))
        b_eq = np.zeros(0)
    else:
        A_eq = np.asarray(A_eq, dtype=float).reshape(-1, n)
        b_eq = np.asarray(b_eq, dtype=float).ravel()

    # feasibility
    res = _lp(np.zeros(n), A_ub=A if len(A) else None, b_ub=b if len(A) else None,
              A_eq=A_eq if len(A_eq) else None, b_eq=b_eq if len(A_eq) else None,
              bounds=[(None, None)] * n)
    if not res.success:
        return PolyConvexSet(n)

    rec = cone_from_halfspaces(A, A_eq, dim=n)
    ray_rows = [r for r in rec.rays]
    for l in rec.lineality:
        ray_rows.append(l)
        ray_rows.append(-l)

    lin = np.array(rec.lineality) if len(rec.lineality) else np.zeros((0, n))
    P = _nullspace(lin) if lin.size else np.eye(n)
    q = P.shape[1]
    Aq = A @ P
    Eq = A_eq @ P
    verts_y = _enumerate_vertices(Aq, b, Eq, b_eq, q)
    vertices = [P @ y for y in verts_y]
    if not vertices:
        # No vertex found by enumeration (can happen only by numerics); fall
        # back to one feasible point so the set is represented.
        vertices = [res.x]
    return PolyConvexSet(n, vertices=vertices, rays=ray_rows)


def _enumerate_vertices(A, b, E, e, n) -> List[np.ndarray]:
    """Basic feasible points of {y : A y <= b, E y = e} in R^n (pointed)."""
    if n == 0:
        # ambient collapsed; the single point is the origin if feasible
        ok = (len(A) == 0 or np.all(0 <= b + 1e-9)) and (len(E) == 0 or np.all(np.abs(e) <= 1e-9))
        return [np.zeros(0)] if ok else []
    rows = []
    rhs = []
    eq_count = len(E)
    for i in range(eq_count):
        rows.append(E[i])
        rhs.append(e[i])
    m = len(A)
    rank_e = np.linalg.matrix_rank(E) if eq_count else 0
    need = n - rank_e
    out = []
    scale = max(1.0, float(np.max(np.abs(b))) if len(b) else 1.0)
    for combo in itertools.combinations(range(m), need) if need <= m else []:
        M = np.vstack([E, A[list(combo)]]) if eq_count else A[list(combo)]
        r = np.concatenate([e, b[list(combo)]]) if eq_count else b[list(combo)]
        if M.shape[0] == 0:
            continue
        if np.linalg.matrix_rank(M) < n:
            continue
        y, *_ = np.linalg.lstsq(M, r, rcond=None)
        if np.linalg.norm(M @ y - r) > 1e-7 * scale:
            continue
        if len(A) and np.any(A @ y > b + 1e-7 * scale):
            continue
        if eq_count and np.any(np.abs(E @ y - e) > 1e-7 * scale):
            continue
        out.append(y)
    if need == 0:
        y, *_ = np.linalg.lstsq(E, e, rcond=None)
        ok = np.linalg.norm(E @ y - e) <= 1e-7 * scale and (not len(A) or np.all(A @ y <= b + 1e-7 * scale))
        if ok:
            out.append(y)
    return out


# ---------------------------------------------------------------------------
# Cone operations
# ---------------------------------------------------------------------------


def polar_cone(K: PolyCone) -> PolyCone:
    """Polar ``{w : <v, w> <= 0 for all v in K}``."""
    gens = K.generators()
    if len(gens) == 0:
        # polar of {0} is the whole space
        return PolyCone(K.dim, lineality=np.eye(K.dim))
    return cone_from_halfspaces(gens, dim=K.dim)


def cone_halfspaces(K: PolyCone) -> np.ndarray:
    """Rows D with K = {w : D w <= 0} (via the bipolar theorem)."""
    return polar_cone(K).generators()


def slice_cone(K: PolyCone, level: float) -> Union[PolyConvexSet, PolyCone]:
    """The set ``{xi : (xi, level) in K}`` for a cone K in R^(d+1).

    Returns a :class:`PolyCone` when ``level == 0`` (the slice is a cone)
    and a :class:`PolyConvexSet` otherwise.
    """
    if K.dim < 2:
        raise DimensionMismatchError("slice requires ambient dimension >= 2")
    D = cone_halfspaces(K)
    head = D[:, :-1] if len(D) else np.zeros((0, K.dim - 1))
    last = D[:, -1] if len(D) else np.zeros(0)
    if level == 0.0:
        return cone_from_halfspaces(head, dim=K.dim - 1)
    return polyhedron_from_halfspaces(head, -level * last)


def convex_hull(points: Iterable, dim: Optional[int] = None) -> PolyConvexSet:
    """Minimal vertex representation of the convex hull of finitely many points.

    An empty input yields the (valid, flagged-empty) empty set.
    """
    pts = list(points)
    if not pts:
        if dim is None:
            raise ValueError("dimension required for an empty hull")
        return PolyConvexSet(dim)
    arr = _as_matrix(pts, len(np.atleast_1d(pts[0])))
    arr = _canonical_rows(arr)
    if len(arr) == 1:
        return PolyConvexSet(arr.shape[1], vertices=arr)
    keep = []
    for i in range(len(arr)):
        others = np.delete(arr, i, axis=0)
        if _member_distance(others, np.zeros((0, arr.shape[1])), arr[i]) > 1e-9 * max(1.0, float(np.max(np.abs(arr)))):
            keep.append(arr[i])
    if not keep:  # all points coincide numerically
        keep = [arr[0]]
    return PolyConvexSet(arr.shape[1], vertices=keep)


def minkowski_contains_zero(S: PolyConvexSet, K: PolyCone, tol: Tolerance = DEFAULT_TOL) -> MinkowskiCertificate:
    """Decide ``0 in S + K`` by LP, with a decomposition certificate."""
    if S.is_empty:
        raise ValueError("S must be nonempty")
    if S.dim != K.dim:
        raise DimensionMismatchError("S and K dimensions differ")
    n = S.dim
    V, RS = S.vertices, S.rays
    G = K.generators()
    nv, nrs, ng = len(V), len(RS), len(G)
    # variables: lambda (nv), alpha (nrs), beta (ng), t
    nvar = nv + nrs + ng + 1
    c = np.zeros(nvar)
    c[-1] = 1.0
    blocks = [V.T]
    if nrs:
        blocks.append(RS.T)
    if ng:
        blocks.append(G.T)
    M = np.hstack(blocks)  # n x (nv+nrs+ng)
    A_ub = np.zeros((2 * n, nvar))
    A_ub[:n, : nvar - 1] = M
    A_ub[:n, -1] = -1.0
    A_ub[n:, : nvar - 1] = -M
    A_ub[n:, -1] = -1.0
    b_ub = np.zeros(2 * n)
    A_eq = np.zeros((1, nvar))
    A_eq[0, :nv] = 1.0
    res = _lp(c, A_ub=A_ub, b_ub=b_ub, A_eq=A_eq, b_eq=[1.0], bounds=[(0, None)] * nvar)
    if not res.success:
        return MinkowskiCertificate(False)
    t = float(res.fun)
    if t > tol.abs_tol:
        return MinkowskiCertificate(False, residual=t)
    x = res.x
    xi = V.T @ x[:nv] + (RS.T @ x[nv : nv + nrs] if nrs else 0.0)
    w = G.T @ x[nv + nrs : nv + nrs + ng] if ng else np.zeros(n)
    return MinkowskiCertificate(True, xi=np.asarray(xi, dtype=float), w=np.asarray(w, dtype=float), residual=t)


def support_function(S: PolyConvexSet, v, tol: Tolerance = DEFAULT_TOL) -> ExtendedReal:
    """``sup { <xi, v> : xi in S }``; -inf for the empty set."""
    if S.is_empty:
        return NEG_INF
    v = np.asarray(v, dtype=float)
    if v.shape != (S.dim,):
        raise DimensionMismatchError("direction dimension mismatch")
    scale = max(1.0, float(np.linalg.norm(v)))
    if len(S.rays) and np.any(S.rays @ v > tol.abs_tol * scale):
        return POS_INF
    return ExtendedReal(float(np.max(S.vertices @ v)))


# ---------------------------------------------------------------------------
# Equality up to tolerance
# ---------------------------------------------------------------------------


def _support_grid(dim: int) -> np.ndarray:
    dirs = []
    eye = np.eye(dim)
    for i in range(dim):
        dirs.append(eye[i])
        dirs.append(-eye[i])
    if dim <= 3:
        for signs in itertools.product((-1.0, 1.0), repeat=dim):
            dirs.append(np.array(signs) / math.sqrt(dim))
    if dim == 2:
        for k in range(16):
            a = 2 * math.pi * k / 16
            dirs.append(np.array([math.cos(a), math.sin(a)]))
    return _canonical_rows(np.array(dirs))


def _rays_match(A_rays: np.ndarray, B: PolyCone, tol: Tolerance) -> bool:
    for r in A_rays:
        if not B.contains(r, tol=Tolerance(max(tol.abs_tol, tol.cone_angle_tol), tol.rel_tol, tol.cone_angle_tol)):
            return False
    return True


def set_eq(A, B, tol: Tolerance = DEFAULT_TOL) -> bool:
    """Equality of two cones or two convex sets, up to tolerance.

    Cones compare by mutual generator membership under ``cone_angle_tol``.
    Convex sets compare by support values on a fixed direction grid plus
    ray matching, backed by mutual vertex containment.
    """
    if isinstance(A, PolyCone) and isinstance(B, PolyCone):
        if A.dim != B.dim:
            raise DimensionMismatchError("cone dimensions differ")
        return _rays_match(A.generators(), B, tol) and _rays_match(B.generators(), A, tol)
    if isinstance(A, PolyConvexSet) and isinstance(B, PolyConvexSet):
        if A.dim != B.dim:
            raise DimensionMismatchError("set dimensions differ")
        if A.is_empty or B.is_empty:
            return A.is_empty and B.is_empty
        scale = max(1.0, float(np.max(np.abs(A.vertices))), float(np.max(np.abs(B.vertices))))
        gap = max(tol.abs_tol, tol.rel_tol * scale)
        for v in _support_grid(A.dim):
            ha, hb = support_function(A, v, tol), support_function(B, v, tol)
            if ha.is_finite != hb.is_finite:
                return False
            if ha.is_finite and abs(ha.value - hb.value) > 2 * gap:
                return False
        if not _rays_match(A.rays, B.recession_cone(), tol):
            return False
        if not _rays_match(B.rays, A.recession_cone(), tol):
            return False
        for p in A.vertices:
            if _member_distance(B.vertices, B.rays, p) > gap:
                return False
        for p in B.vertices:
            if _member_distance(A.vertices, A.rays, p) > gap:
                return False
        return True
    raise TypeError("set_eq compares two PolyCone or two PolyConvexSet values")


# ---------------------------------------------------------------------------
# Direction grids (shared by estimators, reconstruction and reports)
# ---------------------------------------------------------------------------


def axis_diagonal_grid(dim: int) -> np.ndarray:
    """The 2n axis directions plus the 2^n sign diagonals (dims <= 3)."""
    dirs = []
    eye = np.eye(dim)
    for i in range(dim):
        dirs.append(eye[i])
        dirs.append(-eye[i])
    if dim <= 3 and dim >= 2:
        for signs in itertools.product((-1.0, 1.0), repeat=dim):
            dirs.append(np.array(signs) / math.sqrt(dim))
    return _canonical_rows(np.array(dirs))


def direction_grid(dim: int, count: int = 16) -> np.ndarray:
    """A deterministic spread of `count` unit directions."""
    if dim == 1:
        vals = [math.cos(2 * math.pi * k / count) for k in range(count)]
        return np.array([[v] for v in vals])
    if dim == 2:
        return np.array([[math.cos(2 * math.pi * k / count), math.sin(2 * math.pi * k / count)] for k in range(count)])
    if dim == 3:
        # Fibonacci sphere
        pts = []
        phi = (1 + math.sqrt(5)) / 2
        for k in range(count):
            z = 1 - 2 * (k + 0.5) / count
            r = math.sqrt(max(0.0, 1 - z * z))
            a = 2 * math.pi * k / phi
            pts.append([r * math.cos(a), r * math.sin(a), z])
        return np.array(pts)
    rng = np.random.default_rng(1234567)
    pts = rng.standard_normal((count, dim))
    return pts / np.linalg.norm(pts, axis=1, keepdims=True)
