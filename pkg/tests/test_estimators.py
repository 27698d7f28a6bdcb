"""Sampling-ladder estimators: worked examples, oracles, and properties."""

import math

import numpy as np
import pytest

from infgrad.errors import DimensionMismatchError, EstimateUnavailableError
from infgrad.estimators import (
    IndexSet,
    LadderConfig,
    clarke_derivative_at_infinity,
    dagger_derivative,
    distance_characterization,
    interior_tangent_test,
    tangent_membership,
    upper_subderivative,
)
from infgrad.functions import epigraph_set, parse_function, parse_set

F_DROP = parse_function("piecewise(x1 <= 0: 0; else: -x1)")
F_EXP = parse_function("exp(x1)")
F_CUBIC = parse_function("x1^3")
F_NEGABS = parse_function("-abs(x1)")
G_EXP2 = parse_function("exp(x1) + x2")


def brute_upper_subderivative(f, v, radii=(1e3, 1e4), eps=0.01, steps=(1e-2, 1e-3)):
    """Independent coarse oracle: explicit loops, no shared machinery."""
    best = -math.inf
    ws = [v + s * eps for s in (-1.0, 0.0, 1.0)]
    for R in radii:
        for x in (R, -R):
            fx = float(f.eval([x]).value)
            for t in steps:
                q = min(float((f.eval([x + t * w]) - f.eval([x])).value) / t for w in ws)
                best = max(best, q)
    return best


class TestUpperSubderivative:
    def test_drop_function_matches_brute_force(self):
        # oracle first: the coarse independent ladder gives ~ max(0, -v)
        oracle = brute_upper_subderivative(F_DROP, -1.0)
        assert oracle == pytest.approx(1.0, abs=0.02)
        est = upper_subderivative(F_DROP, [-1.0])
        assert est.trend == "converged"
        assert est.value.value == pytest.approx(1.0, abs=1e-6)

    def test_exp_negative_direction(self):
        est = upper_subderivative(F_EXP, [-1.0])
        assert est.value.value == pytest.approx(0.0, abs=1e-6)

    def test_cubic_zero_direction_diverges_down(self):
        est = upper_subderivative(F_CUBIC, [0.0])
        assert est.is_neg_inf
        assert est.trend == "diverging_down"

    def test_exp_positive_direction_diverges_up(self):
        assert upper_subderivative(F_EXP, [1.0]).is_pos_inf

    def test_zero_direction_nonpositive(self):
        # the subderivative at direction 0 can never be positive
        for f in (F_DROP, F_EXP, F_NEGABS, G_EXP2):
            v = np.zeros(f.dim)
            est = upper_subderivative(f, v)
            if est.value is not None and est.is_finite:
                assert est.value.value <= 1e-6

    def test_dimension_mismatch(self):
        with pytest.raises(DimensionMismatchError):
            upper_subderivative(F_EXP, [1.0, 0.0])

    def test_positive_homogeneity(self):
        for lam in (2.0, 5.0):
            base = upper_subderivative(F_DROP, [-1.0])
            scaled = upper_subderivative(F_DROP, [-lam])
            bars = lam * base.error_bar + scaled.error_bar + 1e-6
            assert abs(scaled.value.value - lam * base.value.value) <= bars

    def test_convexity_on_random_directions(self):
        rng = np.random.default_rng(17)
        for _ in range(5):
            v1, v2 = rng.normal(0, 1, 2)
            e1 = upper_subderivative(F_NEGABS, [v1])
            e2 = upper_subderivative(F_NEGABS, [v2])
            em = upper_subderivative(F_NEGABS, [(v1 + v2) / 2])
            if all(e.is_finite for e in (e1, e2, em)):
                bars = e1.error_bar + e2.error_bar + em.error_bar + 1e-6
                assert em.value.value <= (e1.value.value + e2.value.value) / 2 + bars


class TestDaggerDerivative:
    def test_exp2_negative_first_coordinate(self):
        est = dagger_derivative(G_EXP2, [-1.0, 0.0])
        assert est.is_finite
        assert est.value.value <= 0.05

    def test_exp2_zero_first_coordinate_blows_up(self):
        assert dagger_derivative(G_EXP2, [0.0, 1.0]).is_pos_inf

    def test_linear_function(self):
        f = parse_function("2*x1 - x2")
        est = dagger_derivative(f, [1.0, 1.0])
        # sup over the shrinking ball biases up by eps * |(2,-1)|
        assert est.is_finite
        assert est.value.value == pytest.approx(1.0, abs=0.1)

    def test_consistency_upper_below_dagger(self):
        cases = [(F_DROP, [-1.0]), (F_NEGABS, [1.0]), (G_EXP2, [-1.0, 0.0])]
        for f, v in cases:
            up = upper_subderivative(f, v)
            dag = dagger_derivative(f, v)
            if up.is_finite and dag.is_finite:
                assert up.value.value <= dag.value.value + up.error_bar + dag.error_bar + 1e-6


class TestClarkeDerivative:
    def test_negabs_matches_brute_force(self):
        # oracle: quotient [f(x+t) - f(x)]/t at far points on both sides
        vals = []
        for R in (1e3, 1e4):
            for x in (R, -R):
                t = 1e-3
                vals.append((float(F_NEGABS.eval([x + t]).value) - float(F_NEGABS.eval([x]).value)) / t)
        assert max(vals) == pytest.approx(1.0, abs=1e-6)
        est = clarke_derivative_at_infinity(F_NEGABS, [1.0])
        assert est.value.value == pytest.approx(1.0, abs=1e-6)

    def test_exp_diverges(self):
        assert clarke_derivative_at_infinity(F_EXP, [1.0]).is_pos_inf

    def test_constant(self):
        est = clarke_derivative_at_infinity(parse_function("5"), [1.0])
        assert est.value.value == pytest.approx(0.0, abs=1e-9)


class TestTangentMembership:
    def test_epigraph_drop_member(self):
        E = epigraph_set(F_DROP)
        assert tangent_membership(E, [1.0, 1.0], IndexSet((1,))).status == "member"

    def test_epigraph_drop_nonmember_with_witness(self):
        E = epigraph_set(F_DROP)
        verdict = tangent_membership(E, [0.0, -1.0], IndexSet((1,)))
        assert verdict.status == "nonmember"
        assert "x" in verdict.witness

    def test_zero_always_member(self):
        E = epigraph_set(F_DROP)
        assert tangent_membership(E, [0.0, 0.0], IndexSet((1,))).status == "member"

    def test_unbounded_precondition(self):
        slab = parse_set("x1 <= 0; x1 >= -1", dim=2)
        with pytest.raises(EstimateUnavailableError):
            tangent_membership(slab, [0.0, 1.0], IndexSet((1,)))


class TestInteriorTangent:
    def test_exp2_epigraph_interior(self):
        E = epigraph_set(G_EXP2)
        assert interior_tangent_test(E, [-1.0, 0.0, 1.0], IndexSet((1, 2))) == "interior"

    def test_exp2_epigraph_not_interior(self):
        E = epigraph_set(G_EXP2)
        assert interior_tangent_test(E, [1.0, 0.0, 0.0], IndexSet((1, 2))) == "not_interior"

    def test_bounded_projection_errors(self):
        slab = parse_set("x1 <= 0; x1 >= -1", dim=2)
        with pytest.raises(EstimateUnavailableError):
            interior_tangent_test(slab, [0.0, 1.0], IndexSet((1,)))


class TestDistanceCharacterization:
    def test_parallel_translation_is_zero(self):
        C = parse_set("x2 <= 0", dim=2)
        res = distance_characterization(C, [1.0, 0.0])
        assert res.verdict == "zero"

    def test_outward_direction_is_one(self):
        # oracle: d(x + t e2) - d(x) = t exactly when x2 >= 0
        C = parse_set("x2 <= 0", dim=2)
        res = distance_characterization(C, [0.0, 1.0])
        assert res.verdict == "positive"
        assert res.estimate.value.value == pytest.approx(1.0, abs=0.05)

    def test_zero_displacement(self):
        C = parse_set("x2 <= 0", dim=2)
        res = distance_characterization(C, [0.0, 0.0])
        assert res.verdict == "zero"

    def test_oracle_agreement_with_membership(self):
        # member directions must score ~0 in the distance characterization
        E = epigraph_set(F_DROP)
        I = IndexSet((1,))
        for v in ([1.0, 1.0], [0.0, 1.0], [-1.0, 2.0]):
            assert tangent_membership(E, v, I).status == "member"
            assert distance_characterization(E, v, I=I).verdict == "zero"
        bad = [0.0, -1.0]
        assert tangent_membership(E, bad, I).status == "nonmember"
        assert distance_characterization(E, bad, I=I).verdict == "positive"


class TestLadderConfig:
    def test_validation(self):
        with pytest.raises(ValueError):
            LadderConfig(radii=(10.0, 10.0))
        with pytest.raises(ValueError):
            LadderConfig(steps=(0.1, 0.2))
        with pytest.raises(ValueError):
            LadderConfig(samples_per_shell=0)

    def test_json_round_trip(self):
        cfg = LadderConfig(radii=(10.0, 100.0), steps=(0.1, 0.01), eps_ball=(0.5, 0.1),
                           samples_per_shell=32, seed=9)
        assert LadderConfig.from_json(cfg.to_json()) == cfg

    def test_index_set(self):
        I = IndexSet((2, 1, 2))
        assert I.coords == (1, 2)
        X = np.arange(6.0).reshape(2, 3)
        assert np.allclose(I.project(X), X[:, :2])
        with pytest.raises(ValueError):
            IndexSet(())
