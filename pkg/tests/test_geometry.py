"""Polyhedral cone and convex-set machinery."""

import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from infgrad.extreal import NEG_INF, POS_INF, ExtendedReal
from infgrad.geometry import (
    DEFAULT_TOL,
    PolyCone,
    PolyConvexSet,
    Tolerance,
    cone_from_halfspaces,
    convex_hull,
    minkowski_contains_zero,
    polar_cone,
    polyhedron_from_halfspaces,
    set_eq,
    slice_cone,
    support_function,
)


def rand_cone(rng, dim, n_rays):
    rays = rng.standard_normal((n_rays, dim))
    return PolyCone(dim, rays=rays)


class TestPolar:
    def test_worked_halfplane_cone(self):
        # K = {v2 >= 0, v1 + v2 >= 0} has polar {w1<=0, w2<=0, w2-w1<=0}
        K = PolyCone(2, rays=[[1, 0], [-1, 1]])
        P = polar_cone(K)
        want = PolyCone(2, rays=[[0, -1], [-1, -1]])
        assert set_eq(P, want)

    def test_polar_whole_space(self):
        R2 = PolyCone(2, lineality=np.eye(2))
        assert polar_cone(R2).is_trivial

    def test_polar_single_ray(self):
        P = polar_cone(PolyCone(2, rays=[[1, 0]]))
        want = PolyCone(2, rays=[[-1, 0]], lineality=[[0, 1]])
        assert set_eq(P, want)

    def test_involution_random(self):
        rng = np.random.default_rng(7)
        for _ in range(40):
            dim = rng.integers(1, 4)
            K = rand_cone(rng, int(dim), int(rng.integers(1, 7)))
            assert set_eq(polar_cone(polar_cone(K)), K)

    def test_anti_monotonicity(self):
        rng = np.random.default_rng(11)
        for _ in range(20):
            dim = int(rng.integers(2, 4))
            rays = rng.standard_normal((4, dim))
            K1 = PolyCone(dim, rays=rays[:2])
            K2 = PolyCone(dim, rays=rays)  # K1 subseteq K2
            P1, P2 = polar_cone(K1), polar_cone(K2)
            for g in P2.generators():
                assert P1.contains(g), "polar must reverse inclusion"

    def test_dimension_cap(self):
        from infgrad.errors import CapabilityError

        with pytest.raises(CapabilityError):
            cone_from_halfspaces(np.eye(5))


class TestHull:
    def test_segment(self):
        h = convex_hull([[-1.0], [1.0]])
        assert set_eq(h, PolyConvexSet(1, [[-1], [1]]))

    def test_singleton(self):
        h = convex_hull([[0.0, 0.0]])
        assert h.vertices.shape == (1, 2)

    def test_interior_point_removed(self):
        h = convex_hull([[0, 0], [1, 0], [0.5, 0]])
        assert len(h.vertices) == 2

    def test_empty_flagged(self):
        h = convex_hull([], dim=2)
        assert h.is_empty


class TestMinkowski:
    def test_paper_decomposition(self):
        S = PolyConvexSet(2, vertices=[[1, 0]])
        K = PolyCone(2, rays=[[-1, 0], [0, -1]])
        cert = minkowski_contains_zero(S, K)
        assert cert.holds
        assert np.allclose(cert.xi + cert.w, 0, atol=1e-6)
        assert np.allclose(cert.xi, [1, 0], atol=1e-6)

    def test_infeasible(self):
        S = PolyConvexSet(2, vertices=[[1, 0]])
        assert not minkowski_contains_zero(S, PolyCone(2)).holds

    def test_segment_contains_zero(self):
        S = PolyConvexSet(1, vertices=[[-1], [0]])
        cert = minkowski_contains_zero(S, PolyCone(1))
        assert cert.holds
        assert abs(cert.xi[0]) <= 1e-6


class TestSupport:
    def test_interval_values(self):
        S = PolyConvexSet(1, vertices=[[-1], [0]])
        # oracle: enumerate the two vertices by hand
        assert support_function(S, [-1.0]) == ExtendedReal(1.0)
        assert support_function(S, [1.0]) == ExtendedReal(0.0)

    def test_ray_gives_infinity(self):
        S = PolyConvexSet(1, vertices=[[0]], rays=[[1]])
        assert support_function(S, [1.0]) == POS_INF
        assert support_function(S, [-1.0]) == ExtendedReal(0.0)

    def test_empty_set(self):
        assert support_function(PolyConvexSet(2), [1.0, 0.0]) == NEG_INF

    def test_zero_direction(self):
        S = PolyConvexSet(2, vertices=[[3, 4], [1, 1]])
        assert support_function(S, [0.0, 0.0]) == ExtendedReal(0.0)

    @given(st.integers(0, 10_000))
    @settings(max_examples=25, deadline=None)
    def test_homogeneous_and_subadditive(self, seed):
        rng = np.random.default_rng(seed)
        S = PolyConvexSet(2, vertices=rng.standard_normal((4, 2)))
        v1, v2 = rng.standard_normal(2), rng.standard_normal(2)
        lam = float(rng.uniform(0.1, 5.0))
        h = lambda v: support_function(S, v).value
        assert h(lam * v1) == pytest.approx(lam * h(v1), rel=1e-9, abs=1e-9)
        assert h(v1 + v2) <= h(v1) + h(v2) + 1e-9


class TestSetEq:
    def test_identity(self):
        A = PolyConvexSet(1, [[-1], [0]])
        assert set_eq(A, PolyConvexSet(1, [[-1], [0]]))

    def test_tolerance_semantics(self):
        A = PolyConvexSet(1, [[-1], [0]])
        B = PolyConvexSet(1, [[-1], [1e-9]])
        assert set_eq(A, B)
        assert not set_eq(A, PolyConvexSet(1, [[0], [1]]))

    def test_ray_mismatch(self):
        A = PolyConvexSet(1, [[0]], rays=[[1]])
        B = PolyConvexSet(1, [[0]])
        assert not set_eq(A, B)

    def test_empty(self):
        assert set_eq(PolyConvexSet(2), PolyConvexSet(2))
        assert not set_eq(PolyConvexSet(2), PolyConvexSet(2, [[0, 0]]))


class TestSliceAndPolyhedra:
    def test_slice_at_minus_one(self):
        N = cone_from_halfspaces(np.array([[1.0, 0.0], [0.0, 1.0], [-1.0, 1.0]]))
        sl = slice_cone(N, -1.0)
        assert set_eq(sl, PolyConvexSet(1, [[-1], [0]]))

    def test_slice_at_zero_is_cone(self):
        N = cone_from_halfspaces(np.array([[1.0, 0.0], [0.0, 1.0], [-1.0, 1.0]]))
        sl = slice_cone(N, 0.0)
        assert isinstance(sl, PolyCone) and sl.is_trivial

    def test_polyhedron_without_vertices(self):
        # the line {x2 = 0}: lineality handled through +/- ray pairs
        P = polyhedron_from_halfspaces(np.zeros((0, 2)), np.zeros(0),
                                       np.array([[0.0, 1.0]]), np.array([0.0]))
        assert not P.is_empty
        assert P.contains([5.0, 0.0]) and not P.contains([0.0, 1.0])

    def test_infeasible_polyhedron(self):
        P = polyhedron_from_halfspaces(np.array([[1.0], [-1.0]]), np.array([-1.0, -1.0]))
        assert P.is_empty

    def test_json_round_trip(self):
        K = PolyCone(2, rays=[[1, 0]], lineality=[[0, 1]])
        K2 = PolyCone.from_json(K.to_json())
        assert set_eq(K, K2)
        S = PolyConvexSet(2, [[1, 2]], rays=[[0, 1]])
        S2 = PolyConvexSet.from_json(S.to_json())
        assert set_eq(S, S2)


def test_tolerance_validation():
    with pytest.raises(ValueError):
        Tolerance(abs_tol=0.0)
