"""Convex-hull certificates for the finiteness condition."""
import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from app.core.errors import DomainError
from app.services.hull import (
    HullStatus,
    affine_dimension,
    exponent_condition,
    hull_membership,
    taikov_hull_certificate,
)

TRIANGLE = [(0.0, 0.0), (2.0, 0.0), (0.0, 2.0)]


class TestHullMembership:

    def test_interior_with_barycentric_coordinates(self):
        cert = hull_membership((0.5, 0.5), TRIANGLE)
        assert cert.status == HullStatus.interior
        np.testing.assert_allclose(cert.coefficients, (0.5, 0.25, 0.25), atol=1e-12)
        assert cert.depth > 0

    def test_edge_point_is_boundary(self):
        assert hull_membership((1.0, 0.0), TRIANGLE).status == HullStatus.boundary

    def test_outside(self):
        cert = hull_membership((2.0, 2.0), TRIANGLE)
        assert cert.status == HullStatus.outside
        assert not cert.inside
        assert cert.coefficients is None

    def test_degenerate_hull_has_no_interior(self):
        cert = hull_membership((1.0, 1.0), [(0.0, 0.0), (2.0, 2.0)])
        assert cert.degenerate
        assert cert.status == HullStatus.boundary

    def test_dimension_mismatch(self):
        with pytest.raises(DomainError):
            hull_membership((1.0,), TRIANGLE)

    def test_affine_dimension(self):
        assert affine_dimension(TRIANGLE) == 2
        assert affine_dimension([(0.0, 0.0), (1.0, 1.0), (2.0, 2.0)]) == 1

    @given(st.lists(st.floats(0.05, 1.0), min_size=3, max_size=3), st.integers(0, 10_000))
    @settings(max_examples=50, deadline=None)
    def test_convex_combinations_are_inside(self, weights, seed):
        w = np.asarray(weights) / np.sum(weights)
        pts = np.random.default_rng(seed).normal(size=(3, 2))
        cert = hull_membership(w @ pts, pts)
        assert cert.inside
        np.testing.assert_allclose(np.asarray(cert.coefficients) @ pts, w @ pts, atol=1e-8)


class TestTaikovCondition:

    def test_one_dimensional_torus_orders(self):
        cert = taikov_hull_certificate((0.0,), [(0.0,), (1.0,)])
        assert cert.status == HullStatus.interior
        np.testing.assert_allclose(cert.coefficients, (0.5, 0.5), atol=1e-12)

    def test_k_equal_to_top_order_is_outside(self):
        assert taikov_hull_certificate((1.0,), [(0.0,), (1.0,)]).status == HullStatus.outside

    def test_exponent_condition(self):
        cond = exponent_condition((0.5, 0.5), TRIANGLE, (0.5, 0.25, 0.25))
        assert cond.equal and cond.dominated
        cond = exponent_condition((0.5, 0.5), TRIANGLE, (0.2, 0.4, 0.4))
        assert not cond.equal and not cond.dominated
