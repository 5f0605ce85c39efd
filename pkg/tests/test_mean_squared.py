"""Mean-squared Taikov and HLP constants, extremal elements and violation scans."""
import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from app.core.errors import DomainError, SharpnessViolation
from app.services.catalog import TorusModel, build_torus
from app.services.mean_squared import (
    RatioStatus,
    ScanKind,
    additive_taikov,
    check_shared_models,
    extremal_element,
    hlp_constant,
    random_violation_scan,
    sharpness_ratio,
    taikov_constant,
)
from app.services.spectral import ExtendedSum, SpectralModel, SumStatus
from tests.conftest import TORUS_K2, explicit_model


class TestTaikovConstant:

    def test_torus(self, torus, policy):
        s = taikov_constant(torus, (1.0, 1.0), policy)
        assert s.status == SumStatus.converged
        assert s.value == pytest.approx(TORUS_K2, abs=1e-8)

    def test_unfolded_matches_folded(self, torus, policy):
        unfolded = build_torus(TorusModel(a=1, k=(0.0,), r_list=((0.0,), (1.0,)), unfolded=True))
        assert taikov_constant(unfolded, (1.0, 1.0), policy).value == pytest.approx(
            taikov_constant(torus, (1.0, 1.0), policy).value, rel=1e-9)

    def test_weights_enter_linearly(self, torus, policy):
        # Σ 2/(h0 + h1 n²) with h = (1, 4) is Σ 2/(1 + (2n)²)
        s = taikov_constant(torus, (1.0, 4.0), policy)
        expected = (math.pi / 2 / math.tanh(math.pi / 2) - 1.0)
        assert s.value == pytest.approx(expected, abs=1e-8)

    def test_vacuous_when_series_diverges(self, policy):
        model = build_torus(TorusModel(a=1, k=(1.0,), r_list=((0.0,), (1.0,))))
        s = taikov_constant(model, (1.0, 1.0), policy)
        assert s.is_infinite
        assert s.status == SumStatus.divergent

    def test_zero_constraint_weight_is_infinite(self):
        model = explicit_model([1.0, 1.0], [[1.0, 1.0], [0.0, 0.0]])
        assert taikov_constant(model, (1.0, 1.0)).status == SumStatus.infinite

    def test_wrong_weight_length(self, torus):
        with pytest.raises(DomainError):
            taikov_constant(torus, (1.0,))

    @given(st.lists(st.floats(0.01, 100.0), min_size=1, max_size=12), st.floats(0.01, 100.0))
    @settings(max_examples=50, deadline=None)
    def test_scaling_of_weights(self, values, t):
        c = np.asarray(values)
        b = np.column_stack([np.ones_like(c), np.arange(1.0, len(c) + 1) ** 2])
        model = explicit_model(c, b)
        base = taikov_constant(model, (1.0, 2.0)).value
        scaled = taikov_constant(model, (t, 2.0 * t)).value
        assert scaled == pytest.approx(base / t, rel=1e-12)


@st.composite
def weighted_models(draw, max_size=10, max_m=3):
    """Finite model, weight vector, an operator index and a factor ≥ 1 to raise it by."""
    size = draw(st.integers(1, max_size))
    m = draw(st.integers(0, max_m))
    c = draw(st.lists(st.floats(0.0, 10.0), min_size=size, max_size=size))
    b = draw(st.lists(st.lists(st.floats(0.1, 10.0), min_size=m + 1, max_size=m + 1), min_size=size, max_size=size))
    h = draw(st.lists(st.floats(0.01, 100.0), min_size=m + 1, max_size=m + 1))
    j = draw(st.integers(0, m))
    factor = draw(st.floats(1.0, 1e3))
    return explicit_model(c, b), h, j, factor


class TestMonotonicity:

    @given(weighted_models())
    @settings(max_examples=60, deadline=None)
    def test_raising_a_weight_never_raises_the_constants(self, case):
        model, h, j, factor = case
        raised = list(h)
        raised[j] *= factor
        assert taikov_constant(model, raised).value <= taikov_constant(model, h).value * (1 + 1e-12)
        assert hlp_constant(model, raised).value <= hlp_constant(model, h).value * (1 + 1e-12)

    @pytest.mark.parametrize("raised", [(2.0, 1.0), (1.0, 2.0), (10.0, 10.0)])
    def test_torus(self, torus, torus_hlp, policy, raised):
        assert taikov_constant(torus, raised, policy).value < taikov_constant(torus, (1.0, 1.0), policy).value
        assert hlp_constant(torus_hlp, raised, policy).value <= hlp_constant(torus_hlp, (1.0, 1.0), policy).value


class TestHlpConstant:

    def test_torus(self, torus_hlp, policy):
        s = hlp_constant(torus_hlp, (1.0, 1.0), policy)
        assert s.value == pytest.approx(0.5, abs=1e-15)
        assert s.converged

    def test_sphere(self, sphere_hlp, policy):
        # ~sup j(j+1)/(1 + j²(j+1)²) peaks at j = 1
        assert hlp_constant(sphere_hlp, (1.0, 1.0), policy).value == pytest.approx(0.4)

    def test_needs_orthogonal_images(self):
        model = SpectralModel.from_entries([1], [1.0], [[1.0]], orthogonal_images=False)
        with pytest.raises(DomainError):
            hlp_constant(model, (1.0,))


class TestAdditive:

    def test_single_mode(self, single_mode):
        coeffs = additive_taikov(single_mode.model_c, single_mode.model_d, (1.0,), (1.0,))
        assert coeffs.coef_c.value == pytest.approx(0.5)
        assert coeffs.coef_d.value == pytest.approx(0.5)

    def test_torus_split_against_direct_sums(self, torus_stechkin, policy):
        # C = identity, D = n⁴: coef_C² = Σ 2/(1+n⁴)², coef_D² = Σ 2n⁴/(1+n⁴)²
        coeffs = additive_taikov(torus_stechkin.model_c, torus_stechkin.model_d, (1.0,), (1.0,), policy)
        n = np.arange(1, 200_001, dtype=float)
        b = 1.0 + n ** 4
        assert coeffs.coef_c.value == pytest.approx(math.sqrt(np.sum(2.0 / b ** 2)), rel=1e-9)
        assert coeffs.coef_d.value == pytest.approx(math.sqrt(np.sum(2.0 * n ** 4 / b ** 2)), rel=1e-9)

    def test_split_never_exceeds_taikov_constant(self, torus_stechkin, policy):
        coeffs = additive_taikov(torus_stechkin.model_c, torus_stechkin.model_d, (1.0,), (1.0,), policy)
        joint = build_torus(TorusModel(a=1, k=(0.0,), r_list=((0.0,), (2.0,))))
        k2 = taikov_constant(joint, (1.0, 1.0), policy).value
        assert coeffs.coef_c.value ** 2 + coeffs.coef_d.value ** 2 <= k2 * (1 + 1e-9)
        assert coeffs.coef_c.value ** 2 + coeffs.coef_d.value ** 2 == pytest.approx(k2, rel=1e-9)

    @given(st.lists(st.floats(0.01, 10.0), min_size=1, max_size=10), st.data())
    @settings(max_examples=40, deadline=None)
    def test_split_on_finite_models(self, c, data):
        size = len(c)
        cc = data.draw(st.lists(st.floats(0.1, 10.0), min_size=size, max_size=size))
        dd = data.draw(st.lists(st.floats(0.0, 10.0), min_size=size, max_size=size))
        model_c = explicit_model(c, [[v] for v in cc])
        model_d = explicit_model(c, [[v] for v in dd])
        coeffs = additive_taikov(model_c, model_d, (1.0,), (1.0,))
        k2 = taikov_constant(explicit_model(c, np.column_stack([cc, dd])), (1.0, 1.0)).value
        assert coeffs.coef_c.value ** 2 + coeffs.coef_d.value ** 2 <= k2 * (1 + 1e-12)

    def test_models_must_share_coefficients(self):
        first = explicit_model([1.0], [[1.0]])
        second = explicit_model([2.0], [[1.0]])
        with pytest.raises(DomainError):
            check_shared_models(first, second)

    def test_models_must_share_index_set(self, torus):
        with pytest.raises(DomainError):
            check_shared_models(torus, explicit_model([2.0], [[1.0, 1.0]]))


class TestSharpness:

    def test_extremal_coefficients(self, torus):
        x = extremal_element(torus, (1.0, 1.0), 5)
        n = np.arange(1, 6)
        np.testing.assert_allclose(x.coefficients, math.sqrt(2) / (1 + n ** 2))
        assert list(x.as_dict()) == [(1,), (2,), (3,), (4,), (5,)]

    def test_ratio_equals_partial_sum(self, torus):
        for level in (1, 10, 100):
            r = sharpness_ratio(torus, (1.0, 1.0), level)
            assert r.value == pytest.approx(r.partial_sum, rel=1e-13)

    def test_ratio_is_increasing(self, torus):
        values = [sharpness_ratio(torus, (1.0, 1.0), n).value for n in (1, 10, 100, 1000)]
        assert values == sorted(values)
        assert values[-1] < TORUS_K2

    def test_gap_matches_analytic_tail(self, torus):
        n = 10_000
        r = sharpness_ratio(torus, (1.0, 1.0), n)
        assert TORUS_K2 - r.value == pytest.approx(2 / (n + 0.5), rel=1e-6)

    def test_insufficient_truncation(self):
        model = explicit_model([0.0, 0.0], [[1.0], [1.0]])
        r = sharpness_ratio(model, (1.0,), 2)
        assert r.value is None
        assert r.status == RatioStatus.insufficient_truncation

    def test_level_echoes_request_past_a_finite_set(self):
        model = explicit_model([1.0, 4.0], [[1.0], [2.0]])
        r = sharpness_ratio(model, (1.0,), 10)
        x = extremal_element(model, (1.0,), 10)
        assert r.level == 10 and x.level == 10
        assert len(x) == 2
        assert r.value == pytest.approx(3.0, rel=1e-14)


class TestViolationScan:

    def test_no_violation_on_torus(self, torus):
        report = random_violation_scan(torus, (1.0, 1.0), 300, seed=7)
        assert not report.violated
        assert 0 < report.max_ratio <= report.constant
        assert report.witness["trial"] >= 0
        assert report.extra["support_pool"] == 64

    def test_hlp_scan(self, torus_hlp):
        report = random_violation_scan(torus_hlp, (1.0, 1.0), 300, seed=7, kind=ScanKind.hlp)
        assert not report.violated
        assert report.max_ratio <= 0.5 * (1 + 1e-12)

    def test_is_deterministic(self, torus):
        first = random_violation_scan(torus, (1.0, 1.0), 200, seed=3)
        second = random_violation_scan(torus, (1.0, 1.0), 200, seed=3)
        assert first.max_ratio == second.max_ratio
        assert first.witness == second.witness

    def test_thread_count_does_not_matter(self, torus, threads):
        threads(1)
        serial = random_violation_scan(torus, (1.0, 1.0), 200, seed=11)
        threads(4)
        parallel = random_violation_scan(torus, (1.0, 1.0), 200, seed=11)
        assert serial.max_ratio == parallel.max_ratio
        assert serial.witness == parallel.witness

    def test_infinite_constant_refused(self, policy):
        model = build_torus(TorusModel(a=1, k=(1.0,), r_list=((0.0,), (1.0,))))
        with pytest.raises(DomainError):
            random_violation_scan(model, (1.0, 1.0), 10, policy=policy)

    def test_understated_constant_is_caught(self, torus):
        report = random_violation_scan(torus, (1.0, 1.0), 50, seed=1, constant=ExtendedSum(1e-6))
        assert report.violated
        with pytest.raises(SharpnessViolation) as info:
            random_violation_scan(torus, (1.0, 1.0), 50, seed=1, constant=ExtendedSum(1e-6), raise_on_violation=True)
        assert info.value.witness == report.witness

    def test_zero_trials(self, torus):
        report = random_violation_scan(torus, (1.0, 1.0), 0)
        assert report.trials == 0 and report.witness is None

    @given(st.lists(st.just(0.0) | st.floats(1e-3, 50.0), min_size=1, max_size=10), st.integers(0, 2**16))
    @settings(max_examples=30, deadline=None)
    def test_cauchy_schwarz_bound(self, values, seed):
        c = np.asarray(values)
        b = np.column_stack([np.ones_like(c), 1.0 + np.arange(len(c), dtype=float)])
        model = explicit_model(c, b)
        constant = taikov_constant(model, (1.0, 1.0))
        if constant.value == 0.0:
            return
        report = random_violation_scan(model, (1.0, 1.0), 50, seed=seed, level=len(c))
        assert not report.violated


@pytest.mark.slow
@pytest.mark.parametrize("fixture, kind", [
    ("torus", ScanKind.taikov),
    ("sphere", ScanKind.taikov),
    ("torus_hlp", ScanKind.hlp),
    ("sphere_hlp", ScanKind.hlp),
])
def test_long_scans(request, fixture, kind):
    model = request.getfixturevalue(fixture)
    report = random_violation_scan(model, (1.0, 1.0), 10_000, seed=2024, kind=kind)
    assert not report.violated
