"""Parsing, evaluation, derivatives, sets and projections."""

import math

import numpy as np
import pytest

from infgrad.errors import (
    CapabilityError,
    DimensionMismatchError,
    EvaluationError,
    InfeasibleSetError,
    ParseError,
)
from infgrad.extreal import POS_INF, ExtendedReal
from infgrad.functions import (
    FuncDesc,
    add_functions,
    affine_cells,
    distance_function,
    epigraph_set,
    lift_indicator,
    negate_function,
    parse_function,
    parse_set,
    project_batch,
)


class TestParser:
    def test_piecewise(self):
        f = parse_function("piecewise(x1 <= 0: 0; else: -x1)")
        assert f.dim == 1
        assert f.eval([2.0]) == ExtendedReal(-2.0)
        assert f.eval([-5.0]) == ExtendedReal(0.0)

    def test_two_dim(self):
        f = parse_function("exp(x1) + x2")
        assert f.dim == 2
        assert f.eval([0.0, 1.0]) == ExtendedReal(2.0)

    def test_identity(self):
        f = parse_function("x1")
        assert f.eval([4.25]) == ExtendedReal(4.25)

    def test_syntax_error_carries_position(self):
        with pytest.raises(ParseError) as err:
            parse_function("exp(x1")
        assert "line 1" in str(err.value)

    def test_unknown_identifier(self):
        with pytest.raises(ParseError):
            parse_function("foo(x1)")

    def test_free_variable_beyond_dimension(self):
        with pytest.raises(ParseError):
            parse_function("x1 + x3", dim=2)

    def test_arity_mismatch(self):
        with pytest.raises(ParseError):
            parse_function("exp(x1, x2)")

    def test_exponent_must_be_integer(self):
        with pytest.raises(ParseError):
            parse_function("x1^0.5")
        assert parse_function("x1^-2").eval([2.0]) == ExtendedReal(0.25)

    def test_min_max_abs_lowering(self):
        f = parse_function("min(x1, 2*x1)")
        assert f.eval([3.0]) == ExtendedReal(3.0)
        assert f.eval([-3.0]) == ExtendedReal(-6.0)
        g = parse_function("max(x1, 0)")
        assert g.eval([-1.0]) == ExtendedReal(0.0)
        assert parse_function("abs(x1)").eval([-2.0]) == ExtendedReal(2.0)

    def test_declared_continuous_validator_rejects_jump(self):
        with pytest.raises(ParseError):
            parse_function("piecewise(x1 <= 0: 0; else: 1)", declared=("continuous",))
        parse_function("piecewise(x1 <= 0: 0; else: -x1)", declared=("continuous",))


class TestEvaluation:
    def test_extended_conventions(self):
        assert parse_function("exp(x1)").eval([0.0]) == ExtendedReal(1.0)
        assert parse_function("1/x1").eval([0.0]) == POS_INF
        assert parse_function("-1/x1").eval([0.0]).is_neg_inf
        assert parse_function("log(x1)").eval([0.0]).is_neg_inf
        assert parse_function("log(x1)").eval([-1.0]).is_pos_inf
        assert parse_function("sqrt(x1)").eval([-1.0]).is_pos_inf

    def test_zero_times_inf_names_subexpression(self):
        f = parse_function("0 * exp(x1)")
        with pytest.raises(EvaluationError) as err:
            f.eval([1000.0])
        assert "0 * exp(x1)" in str(err.value)

    def test_indicator_lift(self):
        C = parse_set("x1 <= 0")
        ind = lift_indicator(C)
        assert ind.eval([-1.0]) == ExtendedReal(0.0)
        assert ind.eval([1.0]) == POS_INF
        assert "lsc" in ind.declared
        # composes to exactly {0, +inf} on samples
        for x in np.linspace(-3, 3, 21):
            val = ind.eval([x])
            assert val == ExtendedReal(0.0) or val.is_pos_inf

    def test_indicator_example_constraint_set(self):
        C = parse_set("x1 >= 0; x2 >= 0; x1*x2 >= 1")
        ind = lift_indicator(C)
        assert ind.eval([1.0, 1.0]) == ExtendedReal(0.0)
        assert ind.eval([0.0, 0.0]).is_pos_inf

    def test_dim_mismatch(self):
        with pytest.raises(DimensionMismatchError):
            parse_function("x1 + x2").eval([1.0])


class TestGradients:
    def test_known_derivatives(self):
        assert parse_function("-abs(x1)").grad([3.0]).gradient[0] == pytest.approx(-1.0)
        assert parse_function("-abs(x1)").grad([0.0]).nondifferentiable
        assert parse_function("exp(x1)").grad([1.0]).gradient[0] == pytest.approx(math.e)

    def test_branch_id(self):
        f = parse_function("piecewise(x1 <= 0: 0; else: -x1)")
        assert f.grad([5.0]).branch_id == (1,)
        assert f.grad([-5.0]).branch_id == (0,)

    def test_gradient_matches_finite_differences(self):
        corpus = [
            parse_function("exp(x1) + x2"),
            parse_function("x1^3 - 2*x1*x2 + x2^2", dim=2),
            parse_function("log(2 + x1^2) * x2"),
            parse_function("sqrt(1 + x1^2)"),
            parse_function("sin(x1) + cos(2*x1)"),
        ]
        rng = np.random.default_rng(3)
        for f in corpus:
            X = rng.uniform(-3, 3, (200, f.dim))
            vals, grads, bad = f.grad_batch(X)
            h = 1e-6
            for i in range(f.dim):
                e = np.zeros(f.dim)
                e[i] = h
                fp = f.eval_batch(X + e)
                fm = f.eval_batch(X - e)
                fd = (fp - fm) / (2 * h)
                ok = ~bad
                denom = np.maximum(1.0, np.abs(grads[ok, i]))
                assert np.all(np.abs(grads[ok, i] - fd[ok]) / denom < 1e-4)


class TestSets:
    def test_kinds(self):
        assert parse_set("x1 + x2 <= 1; x1 >= 0").kind == "polyhedral"
        assert parse_set("x1^2 + x2^2 >= 1").kind == "smooth"
        assert parse_set("abs(x1) <= 1").kind == "mixed"

    def test_membership(self):
        C = parse_set("x2 <= 0", dim=2)
        assert C.membership([0.0, -1.0])
        assert not C.membership([0.0, 1.0])

    def test_rhs_must_be_constant(self):
        with pytest.raises(ParseError):
            parse_set("x1 <= x2")

    def test_polyhedral_pieces_for_mixed(self):
        C = parse_set("abs(x1) <= 1", dim=1)
        assert C.is_piecewise_polyhedral
        pieces = C.polyhedral_pieces()
        assert len(pieces) >= 2


class TestDistance:
    def test_halfspace_projection(self):
        C = parse_set("x2 <= 0", dim=2)
        res = distance_function(C, [0.0, 2.0])
        assert res.value == pytest.approx(2.0, abs=1e-9)
        assert np.allclose(res.nearest, [0.0, 0.0], atol=1e-9)
        assert res.certified_global

    def test_point_inside(self):
        C = parse_set("x2 <= 0", dim=2)
        assert distance_function(C, [3.0, -1.0]).value == pytest.approx(0.0, abs=1e-9)

    def test_smooth_set_matches_grid_oracle(self):
        # oracle: dense grid minimization of |x - c| over C intersected with a box
        C = parse_set("x1 >= 0; x2 >= 0; x1*x2 >= 1")
        g = np.linspace(0.05, 4.0, 240)
        A, B = np.meshgrid(g, g)
        pts = np.stack([A.ravel(), B.ravel()], axis=1)
        member = pts[:, 0] * pts[:, 1] >= 1
        oracle = float(np.min(np.linalg.norm(pts[member] - np.array([0.0, 0.0]), axis=1)))
        res = distance_function(C, [0.0, 0.0])
        assert res.value > 0
        assert not res.certified_global
        assert res.value == pytest.approx(oracle, abs=2e-2)

    def test_one_lipschitz(self):
        C = parse_set("x1 + 2*x2 <= 3; x1 >= -5", dim=2)
        rng = np.random.default_rng(5)
        X = rng.uniform(-10, 10, (50, 2))
        Y = X + rng.normal(0, 2, (50, 2))
        from infgrad.functions import distance_batch

        dx, dy = distance_batch(C, X), distance_batch(C, Y)
        assert np.all(np.abs(dx - dy) <= np.linalg.norm(X - Y, axis=1) + 1e-8)

    def test_infeasible_raises(self):
        C = parse_set("x1 <= -1; x1 >= 1")
        with pytest.raises(InfeasibleSetError):
            distance_function(C, [0.0])


class TestEpigraphAndCells:
    def test_epigraph_membership(self):
        f = parse_function("piecewise(x1 <= 0: 0; else: -x1)")
        E = epigraph_set(f)
        assert E.dim == 2
        assert E.membership([2.0, -2.0])
        assert not E.membership([2.0, -3.0])

    def test_affine_cells(self):
        f = parse_function("piecewise(x1 <= 0: 0; else: -x1)")
        cells = affine_cells(f.body, 1)
        assert len(cells) == 2
        slopes = sorted(c.a[0] for c in cells)
        assert slopes == [-1.0, 0.0]

    def test_nonaffine_cell_marking(self):
        f = parse_function("piecewise(x1 >= 1: x1; x1 <= -1: -x1; else: 0.5*x1^2 + 0.5)")
        with pytest.raises(CapabilityError):
            affine_cells(f.body, 1)
        cells = affine_cells(f.body, 1, on_nonaffine="mark")
        assert sum(c.a is None for c in cells) == 1

    def test_function_algebra(self):
        f = add_functions(parse_function("x1"), parse_function("exp(x1)"))
        assert f.eval([0.0]) == ExtendedReal(1.0)
        g = negate_function(parse_function("x1^2"))
        assert g.eval([2.0]) == ExtendedReal(-4.0)
