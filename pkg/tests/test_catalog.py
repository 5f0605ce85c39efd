"""Catalog models: torus, CROSS manifolds, R^d integrals, g-power multipliers."""
import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy.special import gamma

from app.core.errors import DomainError
from app.models.spec import Family, Functional, GLawKind, GLawSpec
from app.services.catalog import (
    CrossSpace,
    GPowerModel,
    RdModel,
    TorusModel,
    build_cross,
    build_cross_product,
    build_eigen_table,
    build_gpower,
    build_torus,
    cross_eigenvalue_sq,
    cross_multiplicity,
    rd_diagonal_closed_form,
    rd_flat_constant,
    rd_flat_exponents,
    rd_integral,
    weyl_ratio,
)
from app.services.mean_squared import taikov_constant
from app.services.spectral import Membership, SumStatus


class TestTorus:

    def test_folded_weights_carry_the_pair_factor(self, torus):
        table = torus.table(3)
        np.testing.assert_array_equal(table.c, [2.0, 2.0, 2.0])
        np.testing.assert_array_equal(table.b, [[1, 1], [1, 4], [1, 9]])

    def test_unfolded_index_set(self):
        model = build_torus(TorusModel(a=1, k=(0.0,), r_list=((0.0,), (1.0,)), unfolded=True))
        assert model.index_set.membership == Membership.nonzero_lattice
        np.testing.assert_array_equal(model.table(2).c, np.ones(4))

    def test_norm_functional_has_no_factor(self, torus_hlp):
        np.testing.assert_allclose(torus_hlp.table(3).c, [1.0, 2.0, 3.0])

    def test_damping(self):
        model = build_torus(TorusModel(a=1, k=(0.0,), r_list=((0.0,),), damping=(0.5,)))
        np.testing.assert_allclose(model.table(2).c, 2 * np.exp(-np.array([1.0, 2.0])))

    def test_rejects_empty_orders(self):
        with pytest.raises(DomainError):
            TorusModel(a=1, k=(0.0,), r_list=())


class TestCross:

    def test_sphere_s2_multiplicity(self):
        j = np.arange(1, 101)
        nu = cross_multiplicity(CrossSpace(Family.sphere, 2), j)
        np.testing.assert_array_equal(np.rint(nu), 2 * j + 1)

    def test_sphere_s3_multiplicity(self):
        j = np.arange(1, 101)
        nu = cross_multiplicity(CrossSpace(Family.sphere, 3), j)
        np.testing.assert_array_equal(np.rint(nu), (j + 1) ** 2)

    def test_circle_multiplicity(self):
        nu = cross_multiplicity(CrossSpace(Family.sphere, 1), np.arange(1, 20))
        np.testing.assert_allclose(nu, 2.0)

    def test_complex_projective_plane(self):
        space = CrossSpace(Family.complex_projective, 2)
        assert space.d == 4
        assert cross_multiplicity(space, 1) == pytest.approx(8.0)
        assert float(cross_eigenvalue_sq(space, 1)) == 12.0

    def test_zero_eigenvalue_is_simple(self):
        assert cross_multiplicity(CrossSpace(Family.cayley_plane), 0) == 1.0

    def test_negative_index(self):
        with pytest.raises(DomainError):
            cross_multiplicity(CrossSpace(Family.sphere, 2), -1)

    @pytest.mark.parametrize("family, b", [
        (Family.sphere, 2),
        (Family.sphere, 5),
        (Family.real_projective, 3),
        (Family.complex_projective, 2),
        (Family.quaternionic_projective, 2),
        (Family.cayley_plane, 2),
    ])
    def test_weyl_ratio_settles(self, family, b):
        space = CrossSpace(family, b)
        ratios = np.array([weyl_ratio(space, j) for j in (200, 400, 800)])
        assert np.all(np.isfinite(ratios)) and np.all(ratios > 0)
        assert abs(ratios[2] - ratios[1]) < abs(ratios[1] - ratios[0]) + 1e-12
        assert abs(ratios[2] / ratios[1] - 1) < 1e-2

    @pytest.mark.parametrize("family, b", [
        (Family.sphere, 2),
        (Family.sphere, 7),
        (Family.real_projective, 4),
        (Family.complex_projective, 3),
        (Family.quaternionic_projective, 2),
        (Family.cayley_plane, 2),
    ])
    def test_weyl_ratio_at_large_j(self, family, b):
        space = CrossSpace(family, b)
        low, high = weyl_ratio(space, 1_000), weyl_ratio(space, 10_000)
        assert math.isfinite(low) and math.isfinite(high)
        assert abs(high / low - 1) < 0.05

    def test_damping(self):
        plain = build_cross(CrossSpace(Family.sphere, 2), 0.0, [0.0, 1.0])
        damped = build_cross(CrossSpace(Family.sphere, 2), 0.0, [0.0, 1.0], damping=0.5)
        j = np.arange(1, 6)
        np.testing.assert_allclose(damped.table(5).c, plain.table(5).c * np.exp(-j), rtol=1e-14)
        np.testing.assert_array_equal(damped.table(5).b, plain.table(5).b)
        assert damped.growth is None

    def test_negative_damping(self):
        with pytest.raises(DomainError):
            build_cross(CrossSpace(Family.sphere, 2), 0.0, [0.0, 1.0], damping=-1.0)

    def test_sphere_model_weights(self, sphere):
        table = sphere.table(2)
        np.testing.assert_allclose(table.c, [3.0, 5.0])
        np.testing.assert_allclose(table.b, [[1.0, 4.0], [1.0, 36.0]])

    def test_product_model(self):
        model = build_cross_product(CrossSpace(Family.sphere, 2), 2, (0.0, 0.0), [(0.0, 0.0), (1.0, 1.0)])
        c, b = model.weights(np.array([[1, 2]]))
        assert c[0] == pytest.approx(4 * 3 * 5)
        assert b[0, 1] == pytest.approx(4.0 * 36.0)

    def test_eigen_table(self):
        model = build_eigen_table([1.0, 2.0], [3.0, 5.0], 0.0, [0.0, 1.0])
        assert model.index_set.size == 2
        np.testing.assert_allclose(model.table(2).b[:, 1], [1.0, 16.0])


class TestGPower:

    def test_abs_law(self):
        model = build_gpower(GPowerModel(GLawSpec(kind=GLawKind.abs), k=(0.5,), r_list=((0.0,), (1.0,))))
        np.testing.assert_allclose(model.table(3).c, [1.0, 2.0, 3.0])

    def test_table_law_is_finite(self):
        spec = GLawSpec(kind=GLawKind.table, values=[1.0, 0.0, 2.0])
        model = build_gpower(GPowerModel(spec, k=(1.0,), r_list=((0.0,), (1.0,))))
        assert model.index_set.is_finite
        np.testing.assert_allclose(model.table(3).c, [1.0, 0.0, 4.0])

    def test_zero_to_the_zero_is_one(self):
        spec = GLawSpec(kind=GLawKind.table, values=[0.0])
        model = build_gpower(GPowerModel(spec, k=(0.0,), r_list=((0.0,),)))
        assert model.table(1).c[0] == 1.0

    def test_abs_law_matches_torus_bitwise(self):
        k, r_list = (0.5,), ((0.0,), (1.0,), (2.5,))
        torus = build_torus(TorusModel(a=1, k=k, r_list=r_list, functional=Functional.norm))
        gpower = build_gpower(GPowerModel(GLawSpec(kind=GLawKind.abs), k=k, r_list=r_list))
        t, g = torus.table(10_000), gpower.table(10_000)
        assert len(t.c) == len(g.c) == 10_000
        np.testing.assert_array_equal(t.indices, g.indices)
        np.testing.assert_array_equal(t.c, g.c)
        np.testing.assert_array_equal(t.b, g.b)
        assert torus.growth == gpower.growth


def _cauchy_closed_form(k: float, r: float) -> float:
    """(1/π) ∫_0^∞ t^{2k}/(1+t^{2r}) dt."""
    return 1.0 / (2 * r * math.sin(math.pi * (2 * k + 1) / (2 * r)))


class TestRd:

    @pytest.mark.parametrize("k, r", [(0.0, 1.0), (0.0, 2.0), (1.0, 3.0)])
    def test_one_dimensional_closed_form(self, k, r):
        s = rd_integral(RdModel(1, (k,), ((0.0,), (r,))), (1.0, 1.0))
        assert s.status == SumStatus.converged
        assert s.value == pytest.approx(_cauchy_closed_form(k, r), rel=1e-9)

    def test_diagonal_closed_form_matches_quadrature(self):
        model = RdModel(2, (0.0, 0.0), ((0.0, 0.0), (2.0, 0.0), (0.0, 2.0)))
        h = (1.0, 2.0, 3.0)
        closed = rd_diagonal_closed_form(model, h)
        assert rd_integral(model, h).value == pytest.approx(closed.value, rel=1e-6)

    def test_diagonal_closed_form_value(self):
        model = RdModel(1, (0.0,), ((0.0,), (1.0,)))
        expected = gamma(0.5) ** 2 / 2 / math.pi
        assert rd_diagonal_closed_form(model, (1.0, 1.0)).value == pytest.approx(expected, rel=1e-14)

    def test_outside_hull_diverges(self):
        s = rd_integral(RdModel(1, (1.0,), ((0.0,), (1.0,))), (1.0, 1.0))
        assert s.is_infinite
        assert s.status == SumStatus.divergent

    def test_flat_exponents(self):
        model = RdModel(2, (0.0, 0.0), ((0.0, 0.0), (2.0, 0.0), (0.0, 2.0)))
        np.testing.assert_allclose(rd_flat_exponents(model), (0.5, 0.25, 0.25), atol=1e-12)
        lam, value = rd_flat_constant(model)
        assert value.value == pytest.approx(rd_diagonal_closed_form(model, (1.0, 1.0, 1.0)).value, rel=1e-6)

    def test_flat_exponents_need_m_equal_d(self):
        with pytest.raises(DomainError):
            rd_flat_exponents(RdModel(1, (0.0,), ((0.0,), (1.0,), (2.0,))))

    def test_needs_two_orders(self):
        with pytest.raises(DomainError):
            RdModel(1, (0.0,), ((1.0,),))

    @given(
        h=st.tuples(st.floats(0.1, 10.0), st.floats(0.1, 10.0)),
        t=st.floats(0.01, 100.0),
    )
    @settings(max_examples=20, deadline=None)
    def test_scaling_weights_divides_the_integral(self, h, t):
        model = RdModel(1, (0.25,), ((0.0,), (2.0,)))
        base = rd_integral(model, h)
        scaled = rd_integral(model, (t * h[0], t * h[1]))
        assert base.status == scaled.status == SumStatus.converged
        assert scaled.value == pytest.approx(base.value / t, rel=1e-9)


def test_sphere_taikov_constant_is_finite(sphere, policy):
    s = taikov_constant(sphere, (1.0, 1.0), policy)
    j = np.arange(1, 200_001, dtype=float)
    partial = float(np.sum((2 * j + 1) / (1 + (j * (j + 1)) ** 2)))
    assert s.converged
    assert s.value == pytest.approx(partial, rel=1e-9)
