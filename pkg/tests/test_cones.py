"""Exact and sampled cone engines at infinity."""

import numpy as np
import pytest

from infgrad.cones import (
    ConePairAtInfinity,
    epigraph_cones_piecewise_affine,
    exact_cones_polyhedral,
    pointedness_check,
    sampled_normal_cone,
)
from infgrad.errors import CapabilityError, EstimateUnavailableError
from infgrad.estimators import IndexSet, tangent_membership, LadderConfig
from infgrad.functions import parse_function, parse_set
from infgrad.geometry import PolyCone, polar_cone, set_eq, Tolerance

S2 = 2 ** -0.5
ANGULAR = Tolerance(1e-2, 1e-2, 1e-2)


class TestEpigraphCones:
    def test_drop_function(self):
        f = parse_function("piecewise(x1 <= 0: 0; else: -x1)")
        pair = epigraph_cones_piecewise_affine(f)
        assert set_eq(pair.tangent, PolyCone(2, rays=[[1, 0], [-1, 1]]))
        assert set_eq(pair.normal, PolyCone(2, rays=[[0, -1], [-1, -1]]))
        assert pair.method == "exact_polyhedral"

    def test_linear_function(self):
        f = parse_function("2*x1")
        pair = epigraph_cones_piecewise_affine(f)
        # epigraph of a hyperplane: tangent {r >= 2 v}, normal = ray (2, -1)
        assert set_eq(pair.tangent, PolyCone(2, rays=[[1, 2], [-1, -2], [0, 1]]))
        assert set_eq(pair.normal, PolyCone(2, rays=[[2, -1]]))

    def test_affine_tails_with_bounded_quadratic_middle(self):
        f = parse_function("piecewise(x1 >= 1: x1; x1 <= -1: -x1; else: 0.5*x1^2 + 0.5)")
        pair = epigraph_cones_piecewise_affine(f)
        assert set_eq(pair.tangent, PolyCone(2, rays=[[1, 1], [-1, 1]]))

    def test_unbounded_nonaffine_branch_rejected(self):
        with pytest.raises(CapabilityError):
            epigraph_cones_piecewise_affine(parse_function("x1^3"))

    def test_normal_is_polar_of_tangent(self):
        for src in ("piecewise(x1 <= 0: 0; else: -x1)", "-abs(x1)", "abs(x1)", "3*x1 - 1"):
            pair = epigraph_cones_piecewise_affine(parse_function(src))
            assert set_eq(polar_cone(pair.tangent), pair.normal)
            assert pair.tangent.contains(np.zeros(pair.tangent.dim))


class TestExactPolyhedral:
    def test_halfplane_full_index_set(self):
        # derived oracle: the definition-based sampler on the axis directions
        C = parse_set("x2 <= 0", dim=2)
        I = IndexSet((1, 2))
        for v, want in ([1.0, 0.0], "member"), ([-1.0, 0.0], "member"), ([0.0, -1.0], "member"), ([0.0, 1.0], "nonmember"):
            assert tangent_membership(C, v, I).status == want
        pair = exact_cones_polyhedral(C, I)
        assert set_eq(pair.tangent, PolyCone(2, rays=[[0, -1]], lineality=[[1, 0]]))
        assert set_eq(pair.normal, PolyCone(2, rays=[[0, 1]]))

    def test_whole_space(self):
        C = parse_set("0*x1 <= 1", dim=2)
        pair = exact_cones_polyhedral(C, cross_check=False)
        assert pair.normal.is_trivial
        assert len(pair.tangent.lineality) == 2

    def test_pi_bounded_rejected(self):
        slab = parse_set("x1 <= 0; x1 >= -1", dim=2)
        with pytest.raises(EstimateUnavailableError):
            exact_cones_polyhedral(slab, IndexSet((1,)), cross_check=False)

    def test_index_set_matters(self):
        # slab bounded in coord 1 but unbounded in coord 2
        slab = parse_set("x1 <= 0; x1 >= -1", dim=2)
        pair = exact_cones_polyhedral(slab, IndexSet((2,)), cross_check=False)
        assert set_eq(pair.tangent, PolyCone(2, lineality=[[0, 1]]))

    def test_smooth_set_rejected(self):
        C = parse_set("x1^2 + x2^2 >= 1")
        with pytest.raises(CapabilityError):
            exact_cones_polyhedral(C, cross_check=False)


class TestSampledNormals:
    def test_hyperbola_constraint_set(self):
        C = parse_set("x1 >= 0; x2 >= 0; x1*x2 >= 1")
        pair = sampled_normal_cone(C)
        assert pair.method == "sampled_limiting_normals"
        assert set_eq(pair.normal, PolyCone(2, rays=[[-1, 0], [0, -1]]), ANGULAR)
        assert set_eq(pair.tangent, PolyCone(2, rays=[[1, 0], [0, 1]]), ANGULAR)
        # generator angles within 1e-2 of the axes
        for ray in pair.normal.rays:
            assert min(np.arccos(np.clip(-ray[0], -1, 1)), np.arccos(np.clip(-ray[1], -1, 1))) < 1e-2

    def test_halfspace_constant_gradient(self):
        C = parse_set("x1 + 2*x2 <= 3")
        pair = sampled_normal_cone(C)
        want = np.array([1.0, 2.0]) / np.sqrt(5)
        assert set_eq(pair.normal, PolyCone(2, rays=[want]), ANGULAR)

    def test_bounded_boundary_gives_trivial_cone(self):
        C = parse_set("x1^2 + x2^2 >= 1")
        pair = sampled_normal_cone(C)
        assert pair.normal.is_trivial
        assert len(pair.tangent.lineality) == 2

    def test_agreement_with_exact_on_polyhedron(self):
        C = parse_set("x2 <= 0; x1 + x2 <= 0", dim=2)
        exact = exact_cones_polyhedral(C, cross_check=False)
        sampled = sampled_normal_cone(C)
        for g in sampled.normal.generators():
            assert exact.normal.contains(g, ANGULAR)
        # exact generators are member-verdicted by the sampler's polar test
        for g in exact.tangent.generators():
            assert tangent_membership(C, g).status == "member"


class TestMonotonicity:
    def test_dropping_a_constraint_grows_the_tangent(self):
        small = parse_set("x2 <= 0; x1 + x2 <= 0", dim=2)
        large = parse_set("x2 <= 0", dim=2)
        ps = exact_cones_polyhedral(small, cross_check=False)
        pl = exact_cones_polyhedral(large, cross_check=False)
        for g in ps.tangent.generators():
            assert pl.tangent.contains(g)


class TestPointedness:
    def _pair(self, normal):
        return ConePairAtInfinity(tangent=polar_cone(normal), normal=normal,
                                  method="exact_polyhedral", index_set=IndexSet((1, 2)))

    def test_negative_orthant_pointed(self):
        res = pointedness_check(self._pair(PolyCone(2, rays=[[-1, 0], [0, -1]])))
        assert res.status == "pointed"
        assert res.consistent

    def test_line_not_pointed(self):
        # the normal cone {w : w2 = 0} contains the w1 axis
        res = pointedness_check(self._pair(PolyCone(2, rays=[[1, 0]], lineality=[[1, 0]])))
        assert res.status == "not_pointed"

    def test_cubic_epigraph_normal_not_pointed(self):
        # reconstruct the x^3 epigraph normal cone {w1 >= 0, w2 = 0}
        res = pointedness_check(self._pair(PolyCone(2, rays=[[1, 0]], lineality=[])))
        # ray alone is pointed; the lineality version is not
        assert res.status == "pointed"
        res2 = pointedness_check(self._pair(PolyCone(2, lineality=[[1, 0]])))
        assert res2.status == "not_pointed"

    def test_trivial_cone_vacuously_pointed(self):
        res = pointedness_check(self._pair(PolyCone(2)))
        assert res.status == "pointed"
        assert res.tangent_interior_nonempty
        assert res.consistent


def test_oracle_cross_check_runs():
    f = parse_function("piecewise(x1 <= 0: 0; else: -x1)")
    pair = epigraph_cones_piecewise_affine(f, cross_check=True)
    assert pair.cross_checks
    assert all(c["status"] in ("member", "inconclusive") for c in pair.cross_checks)
