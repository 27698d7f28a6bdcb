"""Fermat-at-infinity and constrained necessary-condition checkers."""

import numpy as np
import pytest

from infgrad.functions import FuncDesc, parse_function, parse_set
from infgrad.optimality import (
    constrained_condition_at_infinity,
    fermat_at_infinity,
    find_minimizing_sequence,
)

C_HYPERBOLA = parse_set("x1 >= 0; x2 >= 0; x1*x2 >= 1")


class TestMinimizingSequence:
    def test_exp_decay_escapes(self):
        # derived: values e^{-R} along the ladder; the infimum 0 is never attained
        seq = find_minimizing_sequence(parse_function("exp(-x1)"))
        assert seq.inf_estimate.value == pytest.approx(0.0, abs=1e-6)
        assert seq.escapes_to_infinity
        assert not seq.attained_flag

    def test_square_attained(self):
        seq = find_minimizing_sequence(parse_function("x1^2"))
        assert seq.attained_flag
        assert not seq.escapes_to_infinity
        assert seq.inf_estimate.value == pytest.approx(0.0, abs=1e-6)

    def test_linear_on_hyperbola_escapes(self):
        seq = find_minimizing_sequence(parse_function("x1", dim=2), C_HYPERBOLA)
        assert seq.escapes_to_infinity
        assert seq.inf_estimate.value == pytest.approx(0.0, abs=1e-4)

    def test_unbounded_below(self):
        seq = find_minimizing_sequence(parse_function("x1"))
        assert seq.inf_estimate.is_neg_inf


class TestFermat:
    def test_exp_decay_holds(self):
        cert = fermat_at_infinity(parse_function("exp(-x1)"))
        assert cert.status == "holds"
        assert cert.holds

    def test_square_not_applicable(self):
        cert = fermat_at_infinity(parse_function("x1^2"))
        assert cert.status == "not_applicable"
        assert "attained" in cert.reason

    def test_linear_not_applicable(self):
        cert = fermat_at_infinity(parse_function("2*x1 - x2"))
        assert cert.status == "not_applicable"
        assert "unbounded below" in cert.reason

    def test_exp_holds_via_left_escape(self):
        # the infimum 0 of e^x is approached as x -> -inf, which escapes in
        # norm; the subgradient set [0, inf) contains 0
        cert = fermat_at_infinity(parse_function("exp(x1)"))
        assert cert.status == "holds"

    def test_negative_control_never_certifies(self):
        # unbounded-below objectives must never produce a certificate
        for src in ("x1", "-x1", "2*x1 - x2", "x1 + x2"):
            cert = fermat_at_infinity(parse_function(src))
            assert cert.status == "not_applicable"
            assert cert.holds is None


class TestConstrained:
    def test_hyperbola_certificate(self):
        cert = constrained_condition_at_infinity(parse_function("x1", dim=2), C_HYPERBOLA)
        assert cert.status == "holds"
        dec = cert.decomposition
        assert dec is not None
        assert np.allclose(dec["xi"], [1.0, 0.0], atol=1e-2)
        assert dec["residual"] < 1e-6

    def test_hyperbola_directional_checks_nonnegative(self):
        cert = constrained_condition_at_infinity(parse_function("x1", dim=2), C_HYPERBOLA)
        for row in cert.directional_check:
            assert row["nonnegative"] is not False

    def test_attained_on_halfplane(self):
        # minimizing sequences exist on the boundary ray but the infimum is
        # also attained at a bounded point: not applicable
        C = parse_set("x1 >= 0", dim=2)
        cert = constrained_condition_at_infinity(parse_function("x1", dim=2), C)
        assert cert.status == "not_applicable"
        assert "attained" in cert.reason

    def test_zero_objective_membership_trivially_holds(self):
        C = parse_set("x1 >= 0", dim=2)
        cert = constrained_condition_at_infinity(parse_function("0", dim=2), C)
        assert cert.status == "not_applicable"
        assert cert.decomposition is not None
        assert cert.decomposition["membership"] is True
