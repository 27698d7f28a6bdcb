"""Tangent and normal cones at infinity.

The exact engine covers convex polyhedra and unions of polyhedra coming
from piecewise-affine data: it enumerates faces, keeps those that reach
infinity in the projected coordinates, and intersects their classical
tangent cones.  That face-intersection reduction is a conjecture rather
than a theorem, so every exact result is cross-checked against the
definition-based sampling oracle; a disagreement raises
:class:`OracleDisagreementError`.

Sets with smooth constraints get a sampled normal cone instead: classical
normals collected at far boundary points, clustered into limit directions.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from typing import List, Optional, Sequence, Tuple

import numpy as np
from scipy.optimize import linprog

from .errors import CapabilityError, EstimateUnavailableError, OracleDisagreementError
from .estimators import DEFAULT_LADDER, IndexSet, LadderConfig, set_shell_points, tangent_membership
from .functions import FuncDesc, SetDesc, affine_cells, epigraph_set
from .geometry import (
    DEFAULT_TOL,
    MAX_EXACT_DIM,
    PolyCone,
    Tolerance,
    cone_from_halfspaces,
    polar_cone,
    set_eq,
)

Piece = Tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]  # (A, b, E, e)

# a light ladder is enough for the guard oracle: it only needs to falsify
ORACLE_LADDER = LadderConfig(
    radii=(1e2, 1e4, 1e6),
    steps=(1e-1, 1e-3),
    eps_ball=(0.3, 0.03),
    samples_per_shell=64,
    seed=0,
)


@dataclass
class FaceRecord:
    face_id: int
    piece: int
    active: Tuple[int, ...]
    point: np.ndarray
    unbounded: bool


@dataclass
class ConePairAtInfinity:
    tangent: PolyCone
    normal: PolyCone
    method: str  # exact_polyhedral | sampled_limiting_normals
    index_set: IndexSet
    faces: List[FaceRecord] = field(default_factory=list)
    cross_checks: List[dict] = field(default_factory=list)

    def to_json(self) -> dict:
        return {
            "tangent": self.tangent.to_json(),
            "normal": self.normal.to_json(),
            "method": self.method,
            "index_set": list(self.index_set.coords),
            "cross_checks": self.cross_checks,
        }


# ---------------------------------------------------------------------------
# LP helpers over pieces
# ---------------------------------------------------------------------------


def _lp(c, A_ub=None, b_ub=None, A_eq=None, b_eq=None, bounds=None):
    return linprog(c, A_ub=A_ub, b_ub=b_ub, A_eq=A_eq, b_eq=b_eq, bounds=bounds, method="highs")


def _implicit_equalities(piece: Piece) -> Piece:
    """Move inequality rows that are tight on the whole piece into E."""
    A, b, E, e = piece
    n = A.shape[1] if A.size else E.shape[1]
    keep, add_E, add_e = [], [], []
    for j in range(len(A)):
        res = _lp(A[j], A_ub=A if len(A) else None, b_ub=b if len(A) else None,
                  A_eq=E if len(E) else None, b_eq=e if len(E) else None,
                  bounds=[(None, None)] * n)
        # maximal slack of row j over the piece is b_j - min a_j x
        if res.status == 0 and b[j] - res.fun <= 1e-9 * max(1.0, abs(b[j])):
            add_E.append(A[j])
            add_e.append(b[j])
        else:
            keep.append(j)
    A2 = A[keep] if keep else np.zeros((0, n))
    b2 = b[keep] if keep else np.zeros(0)
    E2 = np.vstack([E, np.array(add_E)]) if add_E else E
    e2 = np.concatenate([e, np.array(add_e)]) if add_E else e
    return A2, b2, E2, e2


def _recession_unbounded_in(piece: Piece, active: Sequence[int], idx: np.ndarray) -> bool:
    """Does the face's recession cone contain d with pi(d) != 0?"""
    A, b, E, e = piece
    n = A.shape[1] if A.size else E.shape[1]
    rows_eq = [E[i] for i in range(len(E))] + [A[i] for i in active]
    rows_le = [A[i] for i in range(len(A)) if i not in set(active)]
    A_eq = np.array(rows_eq) if rows_eq else None
    b_eq = np.zeros(len(rows_eq)) if rows_eq else None
    A_ub = np.array(rows_le) if rows_le else None
    b_ub = np.zeros(len(rows_le)) if rows_le else None
    for i in idx:
        for sign in (1.0, -1.0):
            c = np.zeros(n)
            c[i] = -sign
            res = _lp(c, A_ub=A_ub, b_ub=b_ub, A_eq=A_eq, b_eq=b_eq, bounds=[(-1, 1)] * n)
            if res.status == 0 and -res.fun > 1e-7:
                return True
    return False


def _piece_pi_unbounded(piece: Piece, idx: np.ndarray) -> bool:
    return _recession_unbounded_in(piece, [], idx)


def _enumerate_faces(piece: Piece, piece_id: int, idx: np.ndarray, max_active: int) -> List[FaceRecord]:
    """Faces of one convex piece via exact active sets.

    For a candidate subset S the Chebyshev-style LP maximizes the slack of
    the other rows on the affine hull of S; a positive optimum certifies a
    face whose active set is exactly S.
    """
    A, b, E, e = piece
    n = A.shape[1] if A.size else E.shape[1]
    m = len(A)
    faces = []
    fid = 0
    for s in range(0, max_active + 1):
        for S in itertools.combinations(range(m), s):
            others = [j for j in range(m) if j not in S]
            # variables (x, delta)
            c = np.zeros(n + 1)
            c[-1] = -1.0
            A_eq_rows, b_eq_rows = [], []
            for i in range(len(E)):
                A_eq_rows.append(np.append(E[i], 0.0))
                b_eq_rows.append(e[i])
            for i in S:
                A_eq_rows.append(np.append(A[i], 0.0))
                b_eq_rows.append(b[i])
            A_ub_rows, b_ub_rows = [], []
            for j in others:
                norm = np.linalg.norm(A[j])
                if norm < 1e-12:
                    continue
                A_ub_rows.append(np.append(A[j], norm))
                b_ub_rows.append(b[j])
            res = _lp(
                c,
                A_ub=np.array(A_ub_rows) if A_ub_rows else None,
                b_ub=np.array(b_ub_rows) if A_ub_rows else None,
                A_eq=np.array(A_eq_rows) if A_eq_rows else None,
                b_eq=np.array(b_eq_rows) if b_eq_rows else None,
                bounds=[(None, None)] * n + [(0, 1)],
            )
            if res.status != 0 or res.x is None:
                continue
            if res.x[-1] <= 1e-7:
                continue  # S is not an exact active set (a smaller face)
            x_star = res.x[:n]
            unbounded = _recession_unbounded_in(piece, S, idx)
            faces.append(FaceRecord(fid, piece_id, tuple(S), x_star, unbounded))
            fid += 1
    return faces


def _point_in_piece(piece: Piece, x: np.ndarray, tol: float) -> bool:
    A, b, E, e = piece
    if len(A) and np.any(A @ x > b + tol):
        return False
    if len(E) and np.any(np.abs(E @ x - e) > tol):
        return False
    return True


# ---------------------------------------------------------------------------
# Exact engine
# ---------------------------------------------------------------------------


def _cones_of_union(
    pieces: List[Piece],
    I: IndexSet,
    dim: int,
    oracle_set: Optional[SetDesc],
    cross_check: bool,
    tol: Tolerance,
) -> ConePairAtInfinity:
    if dim > MAX_EXACT_DIM:
        raise CapabilityError(f"exact cone engine supports dimension <= {MAX_EXACT_DIM}")
    total_rows = sum(len(p[0]) + len(p[2]) for p in pieces)
    if total_rows > 64:
        raise CapabilityError("exact cone engine supports at most 64 constraint rows")
    idx = I.indices()
    pieces = [_implicit_equalities(p) for p in pieces]
    if not any(_piece_pi_unbounded(p, idx) for p in pieces):
        raise EstimateUnavailableError(
            "the projection of the set onto the selected coordinates must be unbounded"
        )

    ineq_rows: List[np.ndarray] = []
    eq_rows: List[np.ndarray] = []
    all_faces: List[FaceRecord] = []
    scale = max([1.0] + [float(np.max(np.abs(p[1]))) for p in pieces if len(p[1])])
    for pid, piece in enumerate(pieces):
        A, b, E, e = piece
        rank_e = np.linalg.matrix_rank(E) if len(E) else 0
        faces = _enumerate_faces(piece, pid, idx, max_active=dim - rank_e)
        for f in faces:
            all_faces.append(f)
            if not f.unbounded:
                continue
            # seam faces shared with another piece are interior to the union
            shared = any(
                _point_in_piece(pieces[q], f.point, 1e-7 * scale) for q in range(len(pieces)) if q != pid
            )
            if shared:
                continue
            for i in f.active:
                ineq_rows.append(A[i])
            for i in range(len(E)):
                eq_rows.append(E[i])
    A_ineq = np.array(ineq_rows) if ineq_rows else np.zeros((0, dim))
    A_eq = np.array(eq_rows) if eq_rows else None
    tangent = cone_from_halfspaces(A_ineq, A_eq, dim=dim)
    normal = polar_cone(tangent)
    pair = ConePairAtInfinity(tangent=tangent, normal=normal, method="exact_polyhedral",
                              index_set=I, faces=all_faces)
    if cross_check and oracle_set is not None:
        _run_oracle(pair, oracle_set, tol)
    return pair


def _run_oracle(pair: ConePairAtInfinity, C: SetDesc, tol: Tolerance):
    """Probe every tangent generator with the definition-based sampler."""
    for g in pair.tangent.generators():
        verdict = tangent_membership(C, g, pair.index_set, ORACLE_LADDER, tol)
        pair.cross_checks.append({"direction": g.tolist(), "status": verdict.status})
        if verdict.status == "nonmember":
            raise OracleDisagreementError(
                f"sampler rejects tangent generator {np.round(g, 6).tolist()}: {verdict.witness}"
            )


def exact_cones_polyhedral(
    C: SetDesc,
    I: Optional[IndexSet] = None,
    cross_check: bool = True,
    tol: Tolerance = DEFAULT_TOL,
) -> ConePairAtInfinity:
    """Exact tangent/normal cones at infinity of a (piecewise-)polyhedral set.

    The tangent cone is the intersection of the classical tangent cones
    over all faces that are unbounded in the projected coordinates; the
    normal cone is its polar.  Results are guarded by the sampling oracle
    on every generator unless ``cross_check`` is disabled.
    """
    I = I or IndexSet.all(C.dim)
    if C.kind == "polyhedral":
        pieces = [C.polyhedral_rows()]
    else:
        try:
            pieces = C.polyhedral_pieces()
        except CapabilityError:
            raise CapabilityError(
                "set is not piecewise-polyhedral; use sampled_normal_cone instead"
            )
    return _cones_of_union(pieces, I, C.dim, C if cross_check else None, cross_check, tol)


def epigraph_cones_piecewise_affine(
    f: FuncDesc,
    cross_check: bool = True,
    tol: Tolerance = DEFAULT_TOL,
) -> ConePairAtInfinity:
    """Cones at infinity of epi f for piecewise-affine f (I = base coords).

    Non-affine branches confined to bounded cells are irrelevant at
    infinity and are dropped; an unbounded non-affine branch is a
    capability error.
    """
    n = f.dim
    if n + 1 > MAX_EXACT_DIM:
        raise CapabilityError(f"epigraph dimension {n + 1} exceeds the exact engine cap")
    cells = affine_cells(f.body, n, on_nonaffine="mark")
    pieces: List[Piece] = []
    dropped = 0
    for cell in cells:
        A_rows, b_rows, E_rows, e_rows = [], [], [], []
        for w, c, rel in cell.literals:
            row = np.append(w, 0.0)
            if rel == "<=":
                A_rows.append(row)
                b_rows.append(c)
            elif rel == ">=":
                A_rows.append(-row)
                b_rows.append(-c)
            else:
                E_rows.append(row)
                e_rows.append(c)
        if cell.a is None:
            if _cell_unbounded(cell.literals, n):
                raise CapabilityError("a non-affine branch reaches infinity; use the samplers")
            dropped += 1
            continue
        # epigraph row: a.x - y <= -b
        A_rows.append(np.append(cell.a, -1.0))
        b_rows.append(-cell.b)
        A = np.array(A_rows) if A_rows else np.zeros((0, n + 1))
        E = np.array(E_rows) if E_rows else np.zeros((0, n + 1))
        res = _lp(np.zeros(n + 1), A_ub=A if len(A) else None, b_ub=np.array(b_rows) if A_rows else None,
                  A_eq=E if len(E) else None, b_eq=np.array(e_rows) if E_rows else None,
                  bounds=[(None, None)] * (n + 1))
        if res.status == 0:
            pieces.append((A, np.array(b_rows), E, np.array(e_rows)))
    if not pieces:
        raise CapabilityError("no unbounded affine cells: nothing reaches infinity")
    I = IndexSet.all(n)
    oracle_set = None
    if cross_check:
        oracle_set = epigraph_set(f)
        try:
            oracle_set.polyhedral_pieces()
        except CapabilityError:
            # dropped bounded non-affine cells: project onto the affine tails
            oracle_set._pieces = pieces
    return _cones_of_union(pieces, I, n + 1, oracle_set, cross_check, tol)


def _cell_unbounded(literals, n: int) -> bool:
    A_rows, b_rows, E_rows, e_rows = [], [], [], []
    for w, c, rel in literals:
        if rel == "<=":
            A_rows.append(w)
            b_rows.append(c)
        elif rel == ">=":
            A_rows.append(-w)
            b_rows.append(-c)
        else:
            E_rows.append(w)
            e_rows.append(c)
    A = np.array(A_rows) if A_rows else np.zeros((0, n))
    E = np.array(E_rows) if E_rows else None
    for i in range(n):
        for sign in (1.0, -1.0):
            c = np.zeros(n)
            c[i] = -sign
            res = _lp(c, A_ub=A if len(A) else None, b_ub=np.array(b_rows) if A_rows else None,
                      A_eq=E if E_rows else None, b_eq=np.array(e_rows) if E_rows else None,
                      bounds=[(-1e8, 1e8)] * n)
            if res.status == 3:
                return True
            if res.status == 0 and -res.fun >= 1e7:
                return True
    return False


# ---------------------------------------------------------------------------
# Sampled limiting normals
# ---------------------------------------------------------------------------


def sampled_normal_cone(
    C: SetDesc,
    I: Optional[IndexSet] = None,
    cfg: LadderConfig = DEFAULT_LADDER,
    tol: Tolerance = DEFAULT_TOL,
) -> ConePairAtInfinity:
    """Normal cone at infinity from clustered limits of classical normals.

    Far boundary points contribute the gradients of their active
    constraints (oriented outward); directions are clustered on the unit
    sphere and the conic hull of the top-shell representatives is returned.
    Coverage is evidence, not proof: the method tag says 'sampled'.
    """
    I = I or IndexSet.all(C.dim)
    n = C.dim
    act_tol = 1e-5
    collected: List[Tuple[int, np.ndarray]] = []
    any_points = False
    count = min(32, cfg.samples_per_shell) if C.kind != "polyhedral" else cfg.samples_per_shell
    for k, R in enumerate(cfg.radii):
        pts = set_shell_points(C, I, R, count, cfg.seed, k)
        if len(pts) == 0:
            continue
        any_points = True
        vals = C.constraint_values(pts)
        for ci, (expr, rel, const) in enumerate(C.constraints):
            scalec = np.maximum(1.0, np.abs(vals[:, ci]))
            active = np.abs(vals[:, ci] - const) <= act_tol * scalec
            if not np.any(active):
                continue
            sub = pts[active]
            from .functions import _BatchCtx, _grad_batch  # gradient of one constraint

            ctx = _BatchCtx(len(sub), tol.abs_tol)
            _, G = _grad_batch(expr, sub, ctx)
            ok = np.all(np.isfinite(G), axis=1) & ~ctx.kink
            for g in G[ok]:
                norm = np.linalg.norm(g)
                if norm < 1e-12:
                    continue
                u = g / norm
                if rel == "<=":
                    collected.append((k, u))
                elif rel == ">=":
                    collected.append((k, -u))
                else:
                    collected.append((k, u))
                    collected.append((k, -u))
    if not any_points:
        raise EstimateUnavailableError(
            "no feasible far points found: the projection of the set appears bounded"
        )
    reps = _cluster_directions(collected, len(cfg.radii), threshold=tol.cone_angle_tol * 1e3)
    normal = PolyCone(n, rays=reps)
    tangent = polar_cone(normal)
    return ConePairAtInfinity(tangent=tangent, normal=normal,
                              method="sampled_limiting_normals", index_set=I)


def _cluster_directions(collected: List[Tuple[int, np.ndarray]], n_rungs: int, threshold: float) -> List[np.ndarray]:
    """Greedy agglomerative clustering on the unit sphere.

    Cluster representatives are the spherical means of their top-rung
    members; clusters absent from the top two rungs are transients of the
    low shells and are discarded.
    """
    clusters: List[dict] = []
    for rung, u in collected:
        placed = False
        for cl in clusters:
            if np.arccos(np.clip(cl["mean"] @ u, -1.0, 1.0)) <= threshold:
                cl["members"].append((rung, u))
                vecs = np.array([m[1] for m in cl["members"]])
                mean = vecs.mean(axis=0)
                cl["mean"] = mean / np.linalg.norm(mean)
                placed = True
                break
        if not placed:
            clusters.append({"mean": u.copy(), "members": [(rung, u)]})
    reps = []
    top = {n_rungs - 1, n_rungs - 2}
    for cl in clusters:
        rungs = {r for r, _ in cl["members"]}
        if not (rungs & top):
            continue
        top_rung = max(rungs)
        vecs = np.array([u for r, u in cl["members"] if r == top_rung])
        mean = vecs.mean(axis=0)
        reps.append(mean / np.linalg.norm(mean))
    return reps


# ---------------------------------------------------------------------------
# Pointedness
# ---------------------------------------------------------------------------


@dataclass
class PointednessResult:
    status: str  # pointed | not_pointed
    tangent_interior_nonempty: bool
    consistent: bool  # the two statements agree, as they must


def pointedness_check(pair: ConePairAtInfinity, tol: Tolerance = DEFAULT_TOL) -> PointednessResult:
    """A cone is pointed when it contains no line; cross-reports the dual
    statement that the tangent cone has nonempty interior."""
    N = pair.normal
    pointed = True
    if len(N.lineality):
        pointed = False
    else:
        for g in N.rays:
            if N.contains(-g, tol=tol):
                pointed = False
                break
    # dual statement: tangent has interior iff its polar is pointed
    T = pair.tangent
    dim_span = len(T.lineality) + (np.linalg.matrix_rank(T.generators()) if len(T.generators()) else 0)
    full_dim = False
    if len(T.generators()):
        full_dim = np.linalg.matrix_rank(np.vstack([T.generators()])) == T.dim
    interior_nonempty = full_dim and _has_interior(T)
    return PointednessResult(
        status="pointed" if pointed else "not_pointed",
        tangent_interior_nonempty=interior_nonempty,
        consistent=(pointed == interior_nonempty),
    )


def _has_interior(T: PolyCone) -> bool:
    """Chebyshev test: is there x with D x <= -delta for the H-rows D?"""
    D = polar_cone(T).generators()
    if len(D) == 0:
        return True  # whole space
    n = T.dim
    c = np.zeros(n + 1)
    c[-1] = -1.0
    A_ub = np.hstack([D, np.ones((len(D), 1))])
    res = _lp(c, A_ub=A_ub, b_ub=np.zeros(len(D)), bounds=[(-1, 1)] * n + [(0, 1)])
    return res.status == 0 and res.x is not None and res.x[-1] > 1e-7
