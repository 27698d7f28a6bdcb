"""Extended-real convention table and arithmetic properties."""

import math

import pytest
from hypothesis import given, strategies as st

from infgrad.errors import EvaluationError
from infgrad.extreal import NEG_INF, POS_INF, ExtendedReal, ext, ext_add, ext_inf, ext_mul, ext_sup

FIN = [ExtendedReal(-3.5), ExtendedReal(0.0), ExtendedReal(2.0)]


class TestConventionTable:
    """Exhaustive sign/infinity combinations of the addition table."""

    def test_plus_inf_dominates_minus_inf(self):
        assert ext_add(POS_INF, NEG_INF) == POS_INF
        assert ext_add(NEG_INF, POS_INF) == POS_INF

    def test_infinite_plus_finite(self):
        for lam in (-7.0, 0.0, 3.0):
            assert ext_add(POS_INF, lam) == POS_INF
            assert ext_add(lam, POS_INF) == POS_INF
            assert ext_add(NEG_INF, lam) == NEG_INF
            assert ext_add(lam, NEG_INF) == NEG_INF

    def test_exhaustive_addition(self):
        values = FIN + [POS_INF, NEG_INF]
        for a in values:
            for b in values:
                out = ext_add(a, b)
                if a.is_pos_inf or b.is_pos_inf:
                    assert out == POS_INF
                elif a.is_neg_inf or b.is_neg_inf:
                    assert out == NEG_INF
                else:
                    assert out.value == a.value + b.value

    def test_scalar_multiplication(self):
        for inf, mirror in ((POS_INF, NEG_INF), (NEG_INF, POS_INF)):
            for lam in (0.5, 2.0, 10.0):
                assert ext_mul(lam, inf) == inf
                assert ext_mul(inf, lam) == inf
                assert ext_mul(-lam, inf) == mirror
                assert ext_mul(inf, -lam) == mirror

    def test_zero_times_infinity_rejected(self):
        with pytest.raises(EvaluationError):
            ext_mul(0.0, POS_INF)
        with pytest.raises(EvaluationError):
            ext_mul(NEG_INF, 0)

    def test_empty_inf_sup(self):
        assert ext_inf([]) == POS_INF
        assert ext_sup([]) == NEG_INF

    def test_nonempty_inf_sup(self):
        vals = [2.0, NEG_INF, 5.0]
        assert ext_inf(vals) == NEG_INF
        assert ext_sup(vals) == ExtendedReal(5.0)

    def test_total_order(self):
        for r in (-1e18, -1.0, 0.0, 1.0, 1e18):
            assert NEG_INF < ExtendedReal(r) < POS_INF
        assert NEG_INF < POS_INF


class TestArithmetic:
    def test_finite(self):
        assert ext_add(2, 2) == ExtendedReal(4.0)
        assert ext_add(3, NEG_INF) == NEG_INF

    def test_subtraction_uses_addition_convention(self):
        # a - b = a + (-b); so inf - inf = +inf
        assert POS_INF - POS_INF == POS_INF
        assert NEG_INF - NEG_INF == POS_INF

    def test_division(self):
        assert ExtendedReal(3.0) / POS_INF == ExtendedReal(0.0)
        with pytest.raises(EvaluationError):
            POS_INF / POS_INF
        with pytest.raises(EvaluationError):
            ExtendedReal(1.0) / ExtendedReal(0.0)

    def test_nan_rejected(self):
        with pytest.raises(ValueError):
            ExtendedReal(math.nan)

    def test_json_round_trip(self):
        for v in (POS_INF, NEG_INF, ExtendedReal(1.25)):
            assert ExtendedReal.from_json(v.to_json()) == v
        assert POS_INF.to_json() == "+inf"
        assert NEG_INF.to_json() == "-inf"


@given(st.floats(-1e12, 1e12), st.floats(-1e12, 1e12))
def test_commutative_and_agrees_with_float(a, b):
    assert ext_add(a, b) == ext_add(b, a)
    assert ext_add(a, b).value == pytest.approx(a + b, rel=1e-12, abs=1e-9)


@given(st.sampled_from([math.inf, -math.inf, 1.0, -2.0, 0.0]),
       st.sampled_from([math.inf, -math.inf, 1.0, -2.0, 0.0]))
def test_commutative_extended(a, b):
    assert ext_add(a, b) == ext_add(b, a)
