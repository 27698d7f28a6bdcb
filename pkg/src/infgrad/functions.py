"""Scalar functions and constraint sets: evaluation, derivatives, projection.

Evaluation is total over the extended reals (+inf wins additions, division
by zero takes the sign of the numerator, log/sqrt off their domain give the
one-sided convention).  Gradients come from forward-mode differentiation of
the active piecewise branch; points within ``abs_tol`` of a guard boundary
are conservatively reported as nondifferentiable.

Two evaluators coexist: an exact scalar one over :class:`ExtendedReal`
(the public contract) and a vectorized float one used by the sampling
ladders, where NaN marks samples that hit an undefined operation.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from typing import Iterable, List, Optional, Sequence, Tuple, Union

import numpy as np
from scipy.optimize import linprog, minimize

from .errors import (
    CapabilityError,
    DimensionMismatchError,
    EvaluationError,
    InfeasibleSetError,
    ParseError,
)
from .extreal import NEG_INF, POS_INF, ExtendedReal
from .geometry import Tolerance, DEFAULT_TOL
from .parsing import (
    BinOp,
    Call,
    Comparison,
    Guard,
    IndicatorNode,
    Neg,
    Node,
    Num,
    Piecewise,
    Var,
    parse_constraints_text,
    parse_expression_text,
)

DECLARABLE = {"lsc", "continuous", "finite"}


# ---------------------------------------------------------------------------
# Scalar evaluation over ExtendedReal
# ---------------------------------------------------------------------------


def _ext_pow(base: ExtendedReal, k: int) -> ExtendedReal:
    if k == 0:
        return ExtendedReal(1.0)
    if base.is_finite:
        if base.value == 0.0 and k < 0:
            return POS_INF
        try:
            return ExtendedReal(float(base.value) ** k)
        except OverflowError:
            sign = 1 if (base.value > 0 or k % 2 == 0) else -1
            return POS_INF if sign > 0 else NEG_INF
    if k < 0:
        return ExtendedReal(0.0)
    if base.is_pos_inf or k % 2 == 0:
        return POS_INF
    return NEG_INF


def _ext_call(name: str, a: ExtendedReal) -> ExtendedReal:
    if name == "exp":
        if a.is_pos_inf:
            return POS_INF
        if a.is_neg_inf:
            return ExtendedReal(0.0)
        try:
            return ExtendedReal(math.exp(a.value))
        except OverflowError:
            return POS_INF
    if name == "log":
        if a.is_pos_inf:
            return POS_INF
        if not a.is_finite or a.value < 0:
            return POS_INF  # off-domain
        if a.value == 0.0:
            return NEG_INF  # one-sided limit
        return ExtendedReal(math.log(a.value))
    if name == "sqrt":
        if a.is_pos_inf:
            return POS_INF
        if not a.is_finite or a.value < 0:
            return POS_INF  # off-domain
        return ExtendedReal(math.sqrt(a.value))
    if name in ("sin", "cos"):
        if not a.is_finite:
            raise EvaluationError(f"{name} of an infinite argument")
        return ExtendedReal(math.sin(a.value) if name == "sin" else math.cos(a.value))
    raise EvaluationError(f"unknown function {name!r}")


def _guard_holds(guard: Guard, x: np.ndarray, source: str) -> bool:
    for comp in guard.comparisons:
        gap = _eval_scalar(comp.gap, x, source)
        if comp.rel == "<=" and not (gap <= 0):
            return False
        if comp.rel == ">=" and not (gap >= 0):
            return False
        if comp.rel == "<" and not (gap < 0):
            return False
        if comp.rel == ">" and not (gap > 0):
            return False
        if comp.rel == "==" and not (gap == 0):
            return False
    return True


def _eval_scalar(node: Node, x: np.ndarray, source: str, branch_trace: Optional[list] = None) -> ExtendedReal:
    if isinstance(node, Num):
        return ExtendedReal(node.value)
    if isinstance(node, Var):
        return ExtendedReal(float(x[node.index]))
    if isinstance(node, Neg):
        return -_eval_scalar(node.arg, x, source, branch_trace)
    if isinstance(node, BinOp):
        if node.op == "^":
            base = _eval_scalar(node.left, x, source, branch_trace)
            return _ext_pow(base, int(node.right.value))
        a = _eval_scalar(node.left, x, source, branch_trace)
        b = _eval_scalar(node.right, x, source, branch_trace)
        if node.op == "+":
            return a + b
        if node.op == "-":
            return a - b
        if node.op == "*":
            try:
                return a * b
            except EvaluationError:
                frag = source[node.span[0] : node.span[1]] if source else "<expr>"
                raise EvaluationError(f"0 * inf in {frag!r}")
        if node.op == "/":
            if b.is_finite and b.value == 0.0:
                return POS_INF if a >= 0 else NEG_INF
            try:
                return a / b
            except EvaluationError:
                frag = source[node.span[0] : node.span[1]] if source else "<expr>"
                raise EvaluationError(f"inf / inf in {frag!r}")
    if isinstance(node, Call):
        return _ext_call(node.name, _eval_scalar(node.arg, x, source, branch_trace))
    if isinstance(node, Piecewise):
        for i, (guard, expr) in enumerate(node.branches):
            if guard is None or _guard_holds(guard, x, source):
                if branch_trace is not None:
                    branch_trace.append(i)
                return _eval_scalar(expr, x, source, branch_trace)
        raise EvaluationError("piecewise fell through all branches")
    if isinstance(node, IndicatorNode):
        inside = _constraints_member(node.constraints, x, 0.0)
        if branch_trace is not None:
            branch_trace.append(0 if inside else 1)
        return ExtendedReal(0.0) if inside else POS_INF
    raise EvaluationError(f"cannot evaluate node {type(node).__name__}")


def _constraints_member(constraints, x: np.ndarray, tol: float) -> bool:
    for expr, rel, const in constraints:
        v = _eval_scalar(expr, x, "")
        if rel == "<=" and not (v <= const + tol):
            return False
        if rel == ">=" and not (v >= const - tol):
            return False
        if rel == "==" and not (abs(v.value - const) <= tol if v.is_finite else False):
            return False
    return True


# ---------------------------------------------------------------------------
# Vectorized evaluation / forward-mode gradients
# ---------------------------------------------------------------------------


class _BatchCtx:
    """Accumulates kink masks while a batch walk is in progress."""

    def __init__(self, m: int, tol: float):
        self.kink = np.zeros(m, dtype=bool)
        self.tol = tol


def _batch_add(a, b):
    with np.errstate(invalid="ignore"):
        out = a + b
    mask = np.isposinf(a) | np.isposinf(b)
    if np.any(mask):
        out = np.where(mask, np.inf, out)
    return out


def _batch_sub(a, b):
    with np.errstate(invalid="ignore"):
        out = a - b
    mask = np.isposinf(a) | np.isneginf(b)
    if np.any(mask):
        out = np.where(mask, np.inf, out)
    return out


def _eval_batch(node: Node, X: np.ndarray) -> np.ndarray:
    m = X.shape[0]
    if isinstance(node, Num):
        return np.full(m, node.value)
    if isinstance(node, Var):
        return X[:, node.index].copy()
    if isinstance(node, Neg):
        return -_eval_batch(node.arg, X)
    if isinstance(node, BinOp):
        if node.op == "^":
            a = _eval_batch(node.left, X)
            k = int(node.right.value)
            return _batch_pow(a, k)
        a = _eval_batch(node.left, X)
        b = _eval_batch(node.right, X)
        if node.op == "+":
            return _batch_add(a, b)
        if node.op == "-":
            return _batch_sub(a, b)
        if node.op == "*":
            with np.errstate(invalid="ignore", over="ignore"):
                return a * b
        if node.op == "/":
            return _batch_div(a, b)
    if isinstance(node, Call):
        return _batch_call(node.name, _eval_batch(node.arg, X))
    if isinstance(node, Piecewise):
        conds, vals = [], []
        default = None
        for guard, expr in node.branches:
            v = _eval_batch(expr, X)
            if guard is None:
                default = v
            else:
                conds.append(_guard_batch(guard, X))
                vals.append(v)
        if not conds:
            return default
        return np.select(conds, vals, default=default)
    if isinstance(node, IndicatorNode):
        inside = _constraints_member_batch(node.constraints, X, 0.0)
        return np.where(inside, 0.0, np.inf)
    raise EvaluationError(f"cannot evaluate node {type(node).__name__}")


def _batch_pow(a, k):
    with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
        if k == 0:
            return np.ones_like(a)
        if k > 0:
            return np.power(a, k)
        out = np.power(a, float(k))
    return np.where(a == 0.0, np.inf, out)


def _batch_div(a, b):
    with np.errstate(divide="ignore", invalid="ignore"):
        out = a / b
    zero = b == 0.0
    if np.any(zero):
        out = np.where(zero & (a >= 0), np.inf, out)
        out = np.where(zero & (a < 0), -np.inf, out)
    return out


def _batch_call(name, a):
    with np.errstate(over="ignore", divide="ignore", invalid="ignore"):
        if name == "exp":
            return np.exp(a)
        if name == "log":
            out = np.log(np.where(a > 0, a, 1.0))
            out = np.where(a > 0, out, np.where(a == 0.0, -np.inf, np.inf))
            return out
        if name == "sqrt":
            return np.where(a >= 0, np.sqrt(np.abs(a)), np.inf)
        if name == "sin":
            return np.sin(a)
        if name == "cos":
            return np.cos(a)
    raise EvaluationError(f"unknown function {name!r}")


def _guard_batch(guard: Guard, X: np.ndarray, ctx: Optional[_BatchCtx] = None) -> np.ndarray:
    ok = np.ones(X.shape[0], dtype=bool)
    for comp in guard.comparisons:
        gap = _eval_batch(comp.gap, X)
        if ctx is not None:
            with np.errstate(invalid="ignore"):
                ctx.kink |= np.abs(gap) <= ctx.tol
        with np.errstate(invalid="ignore"):
            if comp.rel == "<=":
                ok &= gap <= 0
            elif comp.rel == ">=":
                ok &= gap >= 0
            elif comp.rel == "<":
                ok &= gap < 0
            elif comp.rel == ">":
                ok &= gap > 0
            else:
                ok &= gap == 0
    return ok


def _constraints_member_batch(constraints, X: np.ndarray, tol: float) -> np.ndarray:
    ok = np.ones(X.shape[0], dtype=bool)
    for expr, rel, const in constraints:
        v = _eval_batch(expr, X)
        with np.errstate(invalid="ignore"):
            if rel == "<=":
                ok &= v <= const + tol
            elif rel == ">=":
                ok &= v >= const - tol
            else:
                ok &= np.abs(v - const) <= tol
    return ok


def _grad_batch(node: Node, X: np.ndarray, ctx: _BatchCtx) -> Tuple[np.ndarray, np.ndarray]:
    m, n = X.shape
    if isinstance(node, Num):
        return np.full(m, node.value), np.zeros((m, n))
    if isinstance(node, Var):
        g = np.zeros((m, n))
        g[:, node.index] = 1.0
        return X[:, node.index].copy(), g
    if isinstance(node, Neg):
        v, g = _grad_batch(node.arg, X, ctx)
        return -v, -g
    if isinstance(node, BinOp):
        if node.op == "^":
            k = int(node.right.value)
            v, g = _grad_batch(node.left, X, ctx)
            val = _batch_pow(v, k)
            with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
                dv = k * _batch_pow(v, k - 1)
            return val, g * dv[:, None]
        va, ga = _grad_batch(node.left, X, ctx)
        vb, gb = _grad_batch(node.right, X, ctx)
        with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
            if node.op == "+":
                return _batch_add(va, vb), ga + gb
            if node.op == "-":
                return _batch_sub(va, vb), ga - gb
            if node.op == "*":
                return va * vb, ga * vb[:, None] + gb * va[:, None]
            if node.op == "/":
                val = _batch_div(va, vb)
                g = (ga * vb[:, None] - gb * va[:, None]) / (vb * vb)[:, None]
                return val, g
    if isinstance(node, Call):
        v, g = _grad_batch(node.arg, X, ctx)
        val = _batch_call(node.name, v)
        with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
            if node.name == "exp":
                dv = val
            elif node.name == "log":
                dv = 1.0 / v
            elif node.name == "sqrt":
                dv = 0.5 / np.where(val != 0, val, np.nan)
            elif node.name == "sin":
                dv = np.cos(v)
            else:
                dv = -np.sin(v)
        return val, g * dv[:, None]
    if isinstance(node, Piecewise):
        conds, vals, grads = [], [], []
        dval = dgrad = None
        for guard, expr in node.branches:
            v, g = _grad_batch(expr, X, ctx)
            if guard is None:
                dval, dgrad = v, g
            else:
                conds.append(_guard_batch(guard, X, ctx))
                vals.append(v)
                grads.append(g)
        if not conds:
            return dval, dgrad
        val = np.select(conds, vals, default=dval)
        grad = np.empty((m, n))
        chosen = np.full(m, -1)
        for i, c in enumerate(conds):
            chosen = np.where((chosen < 0) & c, i, chosen)
        grad[:] = dgrad
        for i, g in enumerate(grads):
            grad[chosen == i] = g[chosen == i]
        return val, grad
    if isinstance(node, IndicatorNode):
        inside = _constraints_member_batch(node.constraints, X, 0.0)
        val = np.where(inside, 0.0, np.inf)
        for expr, rel, const in node.constraints:
            v = _eval_batch(expr, X)
            with np.errstate(invalid="ignore"):
                ctx.kink |= np.abs(v - const) <= ctx.tol
        return val, np.zeros((m, n))
    raise EvaluationError(f"cannot differentiate node {type(node).__name__}")


# ---------------------------------------------------------------------------
# Polynomial degree / affinity analysis
# ---------------------------------------------------------------------------


def poly_degree(node: Node) -> Optional[int]:
    """Total polynomial degree, or None when not a polynomial."""
    if isinstance(node, Num):
        return 0
    if isinstance(node, Var):
        return 1
    if isinstance(node, Neg):
        return poly_degree(node.arg)
    if isinstance(node, BinOp):
        if node.op == "^":
            k = int(node.right.value)
            d = poly_degree(node.left)
            if d is None:
                return None
            if d == 0:
                return 0
            return d * k if k >= 0 else None
        dl, dr = poly_degree(node.left), poly_degree(node.right)
        if dl is None or dr is None:
            return None
        if node.op in ("+", "-"):
            return max(dl, dr)
        if node.op == "*":
            return dl + dr
        if node.op == "/":
            return dl if dr == 0 else None
    if isinstance(node, Call):
        d = poly_degree(node.arg)
        return 0 if d == 0 else None
    return None  # Piecewise, IndicatorNode


def is_affine(node: Node) -> bool:
    d = poly_degree(node)
    return d is not None and d <= 1


def contains_branching(node: Node) -> bool:
    if isinstance(node, (Piecewise, IndicatorNode)):
        return True
    if isinstance(node, Neg):
        return contains_branching(node.arg)
    if isinstance(node, BinOp):
        return contains_branching(node.left) or contains_branching(node.right)
    if isinstance(node, Call):
        return contains_branching(node.arg)
    return False


def affine_coefficients(node: Node, dim: int) -> Tuple[np.ndarray, float]:
    """(a, b) with node == a.x + b; requires an affine node."""
    if not is_affine(node):
        raise CapabilityError("expression is not affine")
    X = np.zeros((1, dim))
    ctx = _BatchCtx(1, 1e-300)
    v, g = _grad_batch(node, X, ctx)
    return g[0].copy(), float(v[0])


@dataclass
class AffineCell:
    """One polyhedral cell of a piecewise-affine function.

    ``literals`` are (w, c, rel) rows meaning ``w.x REL c`` with rel in
    {"<=", ">=", "=="}; on the cell the function equals ``a.x + b``.
    """

    literals: List[Tuple[np.ndarray, float, str]]
    a: np.ndarray
    b: float


_NEGATE = {"<=": ">=", ">=": "<=", "<": ">=", ">": "<=", }

_MAX_CELLS = 128


def affine_cells(node: Node, dim: int, on_nonaffine: str = "raise") -> List[AffineCell]:
    """Cell decomposition of a piecewise-affine expression.

    Guards must always be affine.  A non-affine branch raises
    :class:`CapabilityError` by default; with ``on_nonaffine='mark'`` its
    cell is returned with ``a=None`` so callers can decide (e.g. drop cells
    that are bounded and therefore irrelevant at infinity).  The
    first-match negation expansion is capped.
    """

    def guard_literals(guard: Guard) -> List[Tuple[np.ndarray, float, str]]:
        lits = []
        for comp in guard.comparisons:
            if not is_affine(comp.gap):
                raise CapabilityError("piecewise guard is not affine")
            w, b = affine_coefficients(comp.gap, dim)
            rel = comp.rel if comp.rel in ("<=", ">=", "==") else ("<=" if comp.rel == "<" else ">=")
            lits.append((w, -b, rel))
        return lits

    def negations(guard: Guard) -> List[Tuple[np.ndarray, float, str]]:
        outs = []
        for (w, c, rel) in guard_literals(guard):
            if rel == "==":
                outs.append((w, c, "<="))
                outs.append((w, c, ">="))
            else:
                outs.append((w, c, _NEGATE[rel]))
        return outs

    def walk(n: Node) -> List[Tuple[List, Node]]:
        """Alternatives of (extra literals, branch-free expression)."""
        if isinstance(n, (Num, Var)):
            return [([], n)]
        if isinstance(n, Neg):
            return [(lits, Neg(span=n.span, arg=e)) for lits, e in walk(n.arg)]
        if isinstance(n, Call):
            return [(lits, Call(span=n.span, name=n.name, arg=e)) for lits, e in walk(n.arg)]
        if isinstance(n, BinOp):
            outs = []
            for l1, e1 in walk(n.left):
                for l2, e2 in walk(n.right):
                    outs.append((l1 + l2, BinOp(span=n.span, op=n.op, left=e1, right=e2)))
            return outs
        if isinstance(n, Piecewise):
            outs = []
            prev: List[Guard] = []
            for guard, expr in n.branches:
                own = guard_literals(guard) if guard is not None else []
                # each previous guard must fail: pick one violated literal
                neg_choices = [negations(g) for g in prev]
                for combo in itertools.product(*neg_choices) if neg_choices else [()]:
                    for lits, e in walk(expr):
                        outs.append((own + list(combo) + lits, e))
                        if len(outs) > _MAX_CELLS:
                            raise CapabilityError("piecewise cell expansion exceeds the supported size")
                if guard is not None:
                    prev.append(guard)
            return outs
        if isinstance(n, IndicatorNode):
            raise CapabilityError("indicator functions are not piecewise-affine")
        raise CapabilityError(f"unsupported node {type(n).__name__}")

    cells = []
    for lits, expr in walk(node):
        if not is_affine(expr):
            if on_nonaffine == "mark":
                cells.append(AffineCell(literals=lits, a=None, b=math.nan))
                continue
            raise CapabilityError("a piecewise branch is not affine")
        a, b = affine_coefficients(expr, dim)
        cells.append(AffineCell(literals=lits, a=a, b=b))
    if not cells:
        raise CapabilityError("no affine cells found")
    return cells


# ---------------------------------------------------------------------------
# FuncDesc / SetDesc / GradResult
# ---------------------------------------------------------------------------


@dataclass
class GradResult:
    point: np.ndarray
    gradient: Optional[np.ndarray]  # None marks "nondifferentiable"
    branch_id: Tuple[int, ...] = ()

    @property
    def nondifferentiable(self) -> bool:
        return self.gradient is None


class FuncDesc:
    """A parsed scalar function over R^n."""

    def __init__(self, body: Node, dim: int, source: str = "", declared: Sequence[str] = ()):
        self.body = body
        self.dim = int(dim)
        self.source = source
        declared = tuple(declared)
        unknown = set(declared) - DECLARABLE
        if unknown:
            raise ValueError(f"unknown declared properties: {sorted(unknown)}")
        self.declared = declared

    # -- metadata --------------------------------------------------------

    @property
    def is_piecewise_affine(self) -> bool:
        try:
            affine_cells(self.body, self.dim)
            return True
        except CapabilityError:
            return False

    @property
    def is_affine(self) -> bool:
        return is_affine(self.body)

    @property
    def is_smooth_expression(self) -> bool:
        return not contains_branching(self.body)

    @property
    def is_lsc(self) -> bool:
        if "lsc" in self.declared or "continuous" in self.declared:
            return True
        return self.is_smooth_expression and not _has_discontinuous_call(self.body)

    # -- evaluation --------------------------------------------------------

    def _check_dim(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float).ravel()
        if x.shape != (self.dim,):
            raise DimensionMismatchError(f"expected a point in R^{self.dim}, got shape {x.shape}")
        return x

    def eval(self, x) -> ExtendedReal:
        return _eval_scalar(self.body, self._check_dim(x), self.source)

    __call__ = eval

    def eval_batch(self, X: np.ndarray) -> np.ndarray:
        X = np.asarray(X, dtype=float)
        return _eval_batch(self.body, X)

    def grad(self, x, tol: Tolerance = DEFAULT_TOL) -> GradResult:
        x = self._check_dim(x)
        vals, grads, kink = self.grad_batch(x[None, :], tol=tol)
        trace: list = []
        try:
            _eval_scalar(self.body, x, self.source, branch_trace=trace)
        except EvaluationError:
            pass
        branch = tuple(trace)
        bad = kink[0] or not np.isfinite(vals[0]) or not np.all(np.isfinite(grads[0]))
        if bad:
            return GradResult(point=x, gradient=None, branch_id=branch)
        return GradResult(point=x, gradient=grads[0].copy(), branch_id=branch)

    def grad_batch(self, X: np.ndarray, tol: Tolerance = DEFAULT_TOL) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
        """(values, gradients, nondiff_mask) for a batch of points."""
        X = np.asarray(X, dtype=float)
        ctx = _BatchCtx(X.shape[0], tol.abs_tol)
        vals, grads = _grad_batch(self.body, X, ctx)
        with np.errstate(invalid="ignore"):
            bad = ctx.kink | ~np.isfinite(vals) | ~np.all(np.isfinite(grads), axis=1)
        return vals, grads, bad

    # -- validation --------------------------------------------------------

    def validate_continuity(self, samples: int = 200, seed: int = 0, box: float = 10.0) -> List[np.ndarray]:
        """Sample guard boundaries and flag branch-value mismatches.

        Returns boundary points where adjacent branches disagree by more
        than a small relative tolerance; empty list means consistent.
        """
        rng = np.random.default_rng(seed)
        bad = []
        for _ in range(samples):
            a = rng.uniform(-box, box, self.dim)
            b = rng.uniform(-box, box, self.dim)
            ta, tb = [], []
            try:
                va = _eval_scalar(self.body, a, self.source, ta)
                vb = _eval_scalar(self.body, b, self.source, tb)
            except EvaluationError:
                continue
            if tuple(ta) == tuple(tb):
                continue
            lo, hi = a, b
            for _ in range(60):
                mid = 0.5 * (lo + hi)
                tm: list = []
                try:
                    _eval_scalar(self.body, mid, self.source, tm)
                except EvaluationError:
                    break
                if tuple(tm) == tuple(ta):
                    lo = mid
                else:
                    hi = mid
            left = _eval_scalar(self.body, lo, self.source)
            right = _eval_scalar(self.body, hi, self.source)
            if left.is_finite and right.is_finite:
                scale = max(1.0, abs(left.value), abs(right.value))
                if abs(left.value - right.value) > 1e-5 * scale + 1e-7 * np.linalg.norm(hi - lo):
                    bad.append(0.5 * (lo + hi))
        return bad

    def __repr__(self) -> str:
        return f"FuncDesc({self.source!r}, dim={self.dim})"


def _has_discontinuous_call(node: Node) -> bool:
    # log/sqrt are continuous on their domain; division can blow up but the
    # extended-value extension stays lsc except at sign changes of 1/x type
    # expressions.  We only treat explicit branching as potentially non-lsc.
    return False


class SetDesc:
    """Constraint set: conjunction of ``expr REL const`` clauses."""

    def __init__(self, constraints: Sequence[Tuple[Node, str, float]], dim: int, source: str = ""):
        self.constraints = [(e, r, float(c)) for (e, r, c) in constraints]
        self.dim = int(dim)
        self.source = source

    @property
    def kind(self) -> str:
        if all(is_affine(e) for e, _, _ in self.constraints):
            return "polyhedral"
        if all(not contains_branching(e) for e, _, _ in self.constraints):
            return "smooth"
        return "mixed"

    # -- membership --------------------------------------------------------

    def membership(self, x, tol: float = 0.0) -> bool:
        x = np.asarray(x, dtype=float).ravel()
        if x.shape != (self.dim,):
            raise DimensionMismatchError(f"expected a point in R^{self.dim}")
        return _constraints_member(self.constraints, x, tol)

    def membership_batch(self, X: np.ndarray, tol: float = 0.0) -> np.ndarray:
        return _constraints_member_batch(self.constraints, np.asarray(X, dtype=float), tol)

    def constraint_values(self, X: np.ndarray) -> np.ndarray:
        """(m, k) matrix of constraint expression values."""
        X = np.asarray(X, dtype=float)
        return np.stack([_eval_batch(e, X) for e, _, _ in self.constraints], axis=1)

    def constraint_gradients(self, x) -> List[Tuple[float, np.ndarray]]:
        x = np.asarray(x, dtype=float).ravel()
        out = []
        ctx = _BatchCtx(1, 1e-300)
        for e, _, _ in self.constraints:
            v, g = _grad_batch(e, x[None, :], ctx)
            out.append((float(v[0]), g[0].copy()))
        return out

    # -- polyhedral data ---------------------------------------------------

    def polyhedral_rows(self) -> Tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
        """(A, b, E, e) with the set equal to {A x <= b, E x = e}."""
        if self.kind != "polyhedral":
            raise CapabilityError("set is not polyhedral")
        A, b, E, e = [], [], [], []
        for expr, rel, const in self.constraints:
            w, c0 = affine_coefficients(expr, self.dim)
            if rel == "<=":
                A.append(w)
                b.append(const - c0)
            elif rel == ">=":
                A.append(-w)
                b.append(c0 - const)
            else:
                E.append(w)
                e.append(const - c0)
        A = np.array(A) if A else np.zeros((0, self.dim))
        E = np.array(E) if E else np.zeros((0, self.dim))
        return A, np.array(b, dtype=float), E, np.array(e, dtype=float)

    @property
    def is_piecewise_polyhedral(self) -> bool:
        if getattr(self, "_pieces_failed", False):
            return False
        try:
            self.polyhedral_pieces()
            return True
        except CapabilityError:
            self._pieces_failed = True
            return False

    def polyhedral_pieces(self) -> List[Tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]]:
        """Cover of the set by convex polyhedra (A, b, E, e).

        Each piecewise-affine constraint contributes its affine cells; the
        pieces are the feasible combinations.  Raises
        :class:`CapabilityError` for non-piecewise-affine constraints.
        """
        if getattr(self, "_pieces", None) is not None:
            return self._pieces
        n = self.dim
        alternatives = []
        for expr, rel, const in self.constraints:
            alts = []
            for cell in affine_cells(expr, n):
                rows: List[Tuple[np.ndarray, float, str]] = list(cell.literals)
                if rel == "<=":
                    rows.append((cell.a, const - cell.b, "<="))
                elif rel == ">=":
                    rows.append((cell.a, const - cell.b, ">="))
                else:
                    rows.append((cell.a, const - cell.b, "=="))
                alts.append(rows)
            alternatives.append(alts)
        pieces = []
        for combo in itertools.product(*alternatives):
            A, b, E, e = [], [], [], []
            for rows in combo:
                for w, c, rel in rows:
                    if rel == "<=":
                        A.append(w)
                        b.append(c)
                    elif rel == ">=":
                        A.append(-w)
                        b.append(-c)
                    else:
                        E.append(w)
                        e.append(c)
            A = np.array(A) if A else np.zeros((0, n))
            E = np.array(E) if E else np.zeros((0, n))
            b = np.array(b, dtype=float)
            e = np.array(e, dtype=float)
            res = linprog(np.zeros(n), A_ub=A if len(A) else None, b_ub=b if len(A) else None,
                          A_eq=E if len(E) else None, b_eq=e if len(E) else None,
                          bounds=[(None, None)] * n, method="highs")
            if res.success:
                pieces.append((A, b, E, e))
            if len(pieces) > 128:
                raise CapabilityError("piecewise-polyhedral decomposition exceeds the supported size")
        if not pieces:
            raise InfeasibleSetError("constraint set is empty")
        self._pieces = pieces
        return pieces

    def __repr__(self) -> str:
        return f"SetDesc({self.source!r}, dim={self.dim}, kind={self.kind})"


# ---------------------------------------------------------------------------
# Parse entry points
# ---------------------------------------------------------------------------


def parse_function(source: str, dim: Optional[int] = None, declared: Sequence[str] = ()) -> FuncDesc:
    """Parse a scalar function; dimension is inferred unless declared."""
    body, seen = parse_expression_text(source, max_dim=dim)
    final_dim = dim if dim is not None else max(seen, 1)
    f = FuncDesc(body, final_dim, source=source, declared=declared)
    if "continuous" in f.declared:
        bad = f.validate_continuity()
        if bad:
            raise ParseError(
                f"declared continuous but branches disagree near {np.round(bad[0], 6).tolist()}"
            )
    return f


def parse_set(source: str, dim: Optional[int] = None) -> SetDesc:
    """Parse a constraint set; right-hand sides must be constants."""
    clauses, seen = parse_constraints_text(source, max_dim=dim)
    final_dim = dim if dim is not None else max(seen, 1)
    out = []
    for lhs, rel, rhs in clauses:
        d = poly_degree(rhs)
        if d != 0:
            raise ParseError("constraint right-hand side must be a constant")
        const = _eval_scalar(rhs, np.zeros(final_dim), source)
        if not const.is_finite:
            raise ParseError("constraint right-hand side must be finite")
        out.append((lhs, rel, const.value))
    return SetDesc(out, final_dim, source=source)


# ---------------------------------------------------------------------------
# Derived objects
# ---------------------------------------------------------------------------


def lift_indicator(C: SetDesc) -> FuncDesc:
    """The indicator function of C: zero on C, +inf outside (lsc: all
    relations are closed)."""
    body = IndicatorNode(constraints=tuple(C.constraints), set_dim=C.dim)
    return FuncDesc(body, C.dim, source=f"indicator({C.source})", declared=("lsc",))


def add_functions(f1: FuncDesc, f2: FuncDesc) -> FuncDesc:
    if f1.dim != f2.dim:
        raise DimensionMismatchError("function dimensions differ")
    body = BinOp(op="+", left=f1.body, right=f2.body)
    declared = tuple(sorted(set(f1.declared) & set(f2.declared)))
    return FuncDesc(body, f1.dim, source=f"({f1.source}) + ({f2.source})", declared=declared)


def negate_function(f: FuncDesc) -> FuncDesc:
    return FuncDesc(Neg(arg=f.body), f.dim, source=f"-({f.source})", declared=f.declared)


def split_indicator_terms(f: FuncDesc) -> Tuple[Node, List[IndicatorNode]]:
    """Separate top-level additive indicator terms from the smooth rest."""
    indicators: List[IndicatorNode] = []

    def strip(n: Node) -> Node:
        if isinstance(n, IndicatorNode):
            indicators.append(n)
            return Num(value=0.0)
        if isinstance(n, BinOp) and n.op == "+":
            return BinOp(span=n.span, op="+", left=strip(n.left), right=strip(n.right))
        return n

    rest = strip(f.body)
    return rest, indicators


def epigraph_set(f: FuncDesc) -> SetDesc:
    """epi f = {(x, y) : y >= f(x)} as a SetDesc in R^(n+1).

    The result remembers the function it came from, which lets samplers
    walk the graph directly instead of projecting ambient points.
    """
    rest, indicators = split_indicator_terms(f)
    n = f.dim
    constraints: List[Tuple[Node, str, float]] = []
    for ind in indicators:
        constraints.extend(ind.constraints)
    gap = BinOp(op="-", left=rest, right=Var(index=n))
    constraints.append((gap, "<=", 0.0))
    out = SetDesc(constraints, n + 1, source=f"epi({f.source})")
    out._epigraph_of = f
    return out


# ---------------------------------------------------------------------------
# Distance / projection
# ---------------------------------------------------------------------------


@dataclass
class DistanceResult:
    value: float
    nearest: np.ndarray
    certified_global: bool  # exact for polyhedral sets, local otherwise


def _project_polyhedral_batch(A, b, E, e, X: np.ndarray, iters: int = 400) -> np.ndarray:
    """Dykstra's alternating projection onto {A x <= b, E x = e}, batched."""
    rows = [(A[i], b[i], False) for i in range(len(A))] + [(E[i], e[i], True) for i in range(len(E))]
    P = X.astype(float).copy()
    if not rows:
        return P
    m = X.shape[0]
    corr = [np.zeros_like(P) for _ in rows]
    norms = [float(a @ a) for a, _, _ in rows]
    for it in range(iters):
        shift = 0.0
        for k, (a, bk, eq) in enumerate(rows):
            if norms[k] < 1e-16:
                continue
            Y = P + corr[k]
            viol = (Y @ a - bk) / norms[k]
            if not eq:
                viol = np.maximum(viol, 0.0)
            Q = Y - viol[:, None] * a[None, :]
            corr[k] = Y - Q
            shift = max(shift, float(np.max(np.abs(Q - P))) if m else 0.0)
            P = Q
        if shift < 1e-12:
            break
    return P


_SMOOTH_START_CACHE = 16


def _smooth_project(C: SetDesc, x: np.ndarray, starts: int = 16) -> Optional[np.ndarray]:
    """Multi-start local projection onto a smooth/mixed constraint set."""
    x = np.asarray(x, dtype=float)
    n = C.dim

    cons = []
    for expr, rel, const in C.constraints:
        def make(expr=expr, rel=rel, const=const):
            ctx_tol = 1e-300

            def fun(y):
                v = _eval_batch(expr, y[None, :])[0]
                if rel == "<=":
                    return const - v
                if rel == ">=":
                    return v - const
                return v - const

            def jac(y):
                ctx = _BatchCtx(1, ctx_tol)
                _, g = _grad_batch(expr, y[None, :], ctx)
                if rel == "<=":
                    return -g[0]
                return g[0]

            return {"type": "eq" if rel == "==" else "ineq", "fun": fun, "jac": jac}

        cons.append(make())

    def objective(y):
        d = y - x
        return float(d @ d), 2.0 * d

    rng = np.random.default_rng(20240901)
    offsets = rng.standard_normal((max(starts - 1, 0), n))
    scale = 1.0 + np.linalg.norm(x)
    best = None
    for s in range(starts):
        y0 = x if s == 0 else x + offsets[s - 1] * 0.25 * scale
        try:
            res = minimize(objective, y0, jac=True, constraints=cons, method="SLSQP",
                           options={"maxiter": 120, "ftol": 1e-12})
        except Exception:
            continue
        if res.x is None:
            continue
        y = np.asarray(res.x, dtype=float)
        if C.membership(y, tol=1e-6 * scale):
            d = float(np.linalg.norm(y - x))
            if best is None or d < best[0]:
                best = (d, y)
    return None if best is None else best[1]


def distance_function(C: SetDesc, x, starts: int = 16) -> DistanceResult:
    """Distance from x to C with the nearest point found.

    Exact (Dykstra on the halfspace description) for polyhedral sets; a
    multi-start local projection with a ``certified_global=False`` flag
    otherwise.  Raises :class:`InfeasibleSetError` when C appears empty.
    """
    x = np.asarray(x, dtype=float).ravel()
    if x.shape != (C.dim,):
        raise DimensionMismatchError(f"expected a point in R^{C.dim}")
    if C.kind == "polyhedral":
        A, b, E, e = C.polyhedral_rows()
        res = linprog(np.zeros(C.dim), A_ub=A if len(A) else None, b_ub=b if len(A) else None,
                      A_eq=E if len(E) else None, b_eq=e if len(E) else None,
                      bounds=[(None, None)] * C.dim, method="highs")
        if not res.success:
            raise InfeasibleSetError("constraint set is empty")
        p = _project_polyhedral_batch(A, b, E, e, x[None, :])[0]
        return DistanceResult(float(np.linalg.norm(p - x)), p, True)
    if C.is_piecewise_polyhedral:
        p = _project_union_batch(C.polyhedral_pieces(), x[None, :])[0]
        return DistanceResult(float(np.linalg.norm(p - x)), p, True)
    if C.membership(x, tol=0.0):
        return DistanceResult(0.0, x.copy(), False)
    p = _smooth_project(C, x, starts=starts)
    if p is None:
        raise InfeasibleSetError("no feasible projection found; the set may be empty")
    return DistanceResult(float(np.linalg.norm(p - x)), p, False)


def _project_union_batch(pieces, X: np.ndarray) -> np.ndarray:
    """Nearest point over a union of polyhedra (exact: best piece per row)."""
    best_p = None
    best_d = None
    for A, b, E, e in pieces:
        P = _project_polyhedral_batch(A, b, E, e, X)
        d = np.linalg.norm(P - X, axis=1)
        if best_p is None:
            best_p, best_d = P, d
        else:
            better = d < best_d
            best_p = np.where(better[:, None], P, best_p)
            best_d = np.where(better, d, best_d)
    return best_p


def project_batch(C: SetDesc, X: np.ndarray, starts: int = 4) -> np.ndarray:
    """Nearest-point batch; exact for (piecewise-)polyhedral C, local otherwise."""
    X = np.asarray(X, dtype=float)
    if C.kind == "polyhedral":
        A, b, E, e = C.polyhedral_rows()
        return _project_polyhedral_batch(A, b, E, e, X)
    if C.is_piecewise_polyhedral:
        return _project_union_batch(C.polyhedral_pieces(), X)
    out = np.empty_like(X)
    for i in range(X.shape[0]):
        if C.membership(X[i], tol=0.0):
            out[i] = X[i]
            continue
        p = _smooth_project(C, X[i], starts=starts)
        out[i] = p if p is not None else np.nan
    return out


def distance_batch(C: SetDesc, X: np.ndarray, starts: int = 4) -> np.ndarray:
    P = project_batch(C, X, starts=starts)
    return np.linalg.norm(P - X, axis=1)
