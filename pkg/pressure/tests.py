import math
from concurrent.futures import ThreadPoolExecutor

import numpy as np
import pytest

from core.exceptions import BrokenSystemError, InsufficientDataError, NumericalOverflowError, ValidationError
from pressure.convergence import aitken_delta_squared, level_rates
from pressure.models import PressureBracket, PressureCurve, PressurePoint, RootEnclosure, kappa_from_q
from pressure.root_finding import certified_root
from pressure.services import PressureService, self_similar_kappa
from words.models import Word

CANTOR_H = math.log(2) / math.log(3)
GOLDEN_H = math.log((1 + math.sqrt(5)) / 2) / math.log(2)
Q_GRID = [-1.0, -0.5, 0.0, 0.5, 1.0, 1.5, 2.0]


def exact_bracket(fn, slack=0.0):
    return lambda t: (fn(t) - slack, fn(t) + slack)


class TestCertifiedRoot:
    def test_exact_linear(self):
        enclosure = certified_root(exact_bracket(lambda t: 0.3 - t), 0.0, 1.0, 1e-10)
        assert enclosure.contains(0.3)
        assert enclosure.width <= 1e-10
        assert not enclosure.ambiguous

    def test_expands_search_range(self):
        enclosure = certified_root(exact_bracket(lambda t: 5.0 - t), 0.0, 1.0, 1e-8)
        assert enclosure.contains(5.0)

    def test_slack_absorbed_into_enclosure(self):
        enclosure = certified_root(exact_bracket(lambda t: 0.3 - t, slack=0.01), 0.0, 1.0, 1e-9)
        assert enclosure.ambiguous
        assert enclosure.contains(0.3)
        assert enclosure.width == pytest.approx(0.02, abs=1e-8)

    def test_point_estimate_from_midpoints(self):
        fn = lambda t: 0.3 - t
        enclosure = certified_root(exact_bracket(fn, slack=0.01), 0.0, 1.0, 1e-9, mid_fn=fn)
        assert enclosure.estimate == pytest.approx(0.3, abs=1e-12)

    def test_no_certified_sign(self):
        with pytest.raises(BrokenSystemError):
            certified_root(lambda t: (-1.0, 1.0), 0.0, 1.0, 1e-6, expansions=5)

    def test_fixed_range_accepts_uncertified_ends(self):
        enclosure = certified_root(exact_bracket(lambda t: 0.5 - t, slack=1.0), 0.0, 1.0, 1e-6, fixed_range=True)
        assert (enclosure.lo, enclosure.hi) == (0.0, 1.0)
        assert enclosure.ambiguous

    def test_invalid_range(self):
        with pytest.raises(ValueError):
            certified_root(exact_bracket(lambda t: -t), 1.0, 0.0, 1e-6)


class TestConvergence:
    def test_aitken_geometric_tail(self):
        values = [1 + 2.0 ** -k for k in range(1, 6)]
        assert aitken_delta_squared(values) == pytest.approx(1.0, abs=1e-12)

    def test_aitken_needs_three_terms(self):
        assert aitken_delta_squared([1.0, 2.0]) is None

    def test_aitken_constant_sequence(self):
        assert aitken_delta_squared([0.5, 0.5, 0.5]) == 0.5

    def test_level_rates(self):
        np.testing.assert_allclose(level_rates([2.0, 4.0], [1, 2]), [2.0, 2.0])


class TestModels:
    def test_kappa_from_q(self):
        assert kappa_from_q(2.0, 0.5) == pytest.approx(2.0)
        assert kappa_from_q(1.0, 1.0) == math.inf

    def test_bracket_signs(self):
        assert PressureBracket(level=3, lo=0.1, mid=0.2, hi=0.3).certified_positive
        assert not PressureBracket(level=3, lo=-0.1, mid=0.0, hi=0.3).certified_negative

    def test_point_falls_back_to_mid(self):
        enclosure = RootEnclosure(lo=0.0, hi=1.0, estimate=2.0)
        assert enclosure.point == 0.5


class TestPartitionSum:
    def test_cantor_at_dimension(self, pressure_service, geometry, cantor):
        atlas = geometry.build_atlas(cantor, 5)
        assert pressure_service.partition_sum(atlas, CANTOR_H) == pytest.approx(1.0, rel=1e-12)

    def test_zero_exponent_counts_words(self, pressure_service, geometry, logistic):
        assert pressure_service.partition_sum(geometry.build_atlas(logistic, 6), 0.0) == 64.0

    def test_affine_factorizes(self, pressure_service, geometry, golden):
        atlas = geometry.build_atlas(golden, 3)
        assert pressure_service.partition_sum(atlas, 1.0) == pytest.approx(27 / 64, rel=1e-14)

    def test_level_zero_rejected(self, pressure_service, geometry, cantor):
        with pytest.raises(ValidationError):
            pressure_service.partition_sum(geometry.build_atlas(cantor, 0), 1.0)

    def test_overflow(self, pressure_service, geometry, cantor):
        with pytest.raises(NumericalOverflowError):
            pressure_service.partition_sum(geometry.build_atlas(cantor, 10), -100.0)


class TestPressureQ:
    def test_cantor_zero_at_dimension(self, pressure_service, cantor):
        bracket = pressure_service.pressure_Q(cantor, CANTOR_H)
        assert bracket.width == 0.0
        assert bracket.mid == pytest.approx(0.0, abs=1e-14)

    def test_affine_closed_form(self, pressure_service, golden):
        bracket = pressure_service.pressure_Q(golden, 1.0, k_max=6)
        assert bracket.mid == pytest.approx(math.log(0.75), rel=1e-12)
        assert bracket.extrapolated == pytest.approx(math.log(0.75), rel=1e-9)

    def test_logistic_zero_exponent(self, pressure_service, logistic):
        bracket = pressure_service.pressure_Q(logistic, 0.0, k_max=10)
        assert bracket.lo == pytest.approx(math.log(2))
        assert bracket.hi == pytest.approx(math.log(2))

    def test_logistic_bracket_width(self, pressure_service, logistic):
        bracket = pressure_service.pressure_Q(logistic, 0.5, k_max=10)
        assert bracket.lo <= bracket.mid <= bracket.hi
        assert bracket.width <= 2 * 3 * 0.5 * math.log(logistic.xi) / 10 + 1e-12

    def test_monotone_in_t(self, pressure_service, logistic):
        first = pressure_service.pressure_Q(logistic, 0.2, k_max=8)
        second = pressure_service.pressure_Q(logistic, 0.6, k_max=8)
        assert first.lo >= second.hi - (first.width + second.width)

    def test_k_max_too_small(self, pressure_service, cantor):
        with pytest.raises(ValidationError):
            pressure_service.pressure_Q(cantor, 0.5, k_max=1)


class TestHausdorffDimension:
    def test_cantor(self, pressure_service, cantor):
        enclosure = pressure_service.hausdorff_dimension(cantor)
        assert enclosure.contains(CANTOR_H, atol=1e-12)
        assert enclosure.width <= 1e-9
        assert abs(enclosure.mid - CANTOR_H) < 1e-8
        assert enclosure.report.passed

    def test_golden(self, pressure_service, golden):
        enclosure = pressure_service.hausdorff_dimension(golden)
        assert abs(enclosure.mid - GOLDEN_H) < 1e-8
        assert enclosure.estimate == pytest.approx(GOLDEN_H, abs=1e-12)

    def test_logistic(self, pressure_service, logistic):
        enclosure = pressure_service.hausdorff_dimension(logistic, k_max=10)
        assert 0 < enclosure.lo < enclosure.estimate < enclosure.hi < 1
        assert enclosure.width <= 6 * enclosure.hi * math.log(logistic.xi) / 10 + 1e-4
        assert enclosure.report.get('partition_sum_bounds').passed
        assert enclosure.report.get('strict_partition_bounds').passed

    @pytest.mark.slow
    def test_logistic_stable_across_levels(self, pressure_service, logistic):
        estimates = [pressure_service.hausdorff_dimension(logistic, k_max=k).estimate for k in (10, 11, 12)]
        assert max(estimates) - min(estimates) < 0.05

    def test_broken_system(self, geometry, cantor, monkeypatch):
        service = PressureService(geometry=geometry)
        monkeypatch.setattr(service, '_q_bracket', lambda system, t, k: PressureBracket(level=k, lo=-1.0, mid=-0.5, hi=0.0))
        with pytest.raises(BrokenSystemError):
            service.hausdorff_dimension(cantor)


class TestMixedSum:
    def test_probability_weights(self, pressure_service, geometry, logistic_surrogate, logistic):
        atlas = geometry.build_atlas(logistic, 4, with_derivatives=True)
        total = pressure_service.mixed_sum(atlas, logistic_surrogate.level_weights(4), 1.0, 0.0)
        assert total == pytest.approx(1.0, rel=1e-12)

    def test_uniform_weights(self, pressure_service, geometry, cantor):
        atlas = geometry.build_atlas(cantor, 3, with_derivatives=True)
        assert pressure_service.mixed_sum(atlas, np.full(8, 1 / 8), 2.0, 0.0) == pytest.approx(1 / 8)

    def test_uniform_product(self, pressure_service, geometry, cantor):
        atlas = geometry.build_atlas(cantor, 2, with_derivatives=True)
        weights = {word: 0.25 for word in atlas.words()}
        assert pressure_service.mixed_sum(atlas, weights, 1.0, 1.0) == pytest.approx(1 / 9)

    def test_missing_weight(self, pressure_service, geometry, cantor):
        atlas = geometry.build_atlas(cantor, 2, with_derivatives=True)
        with pytest.raises(ValidationError):
            pressure_service.mixed_sum(atlas, {Word((1, 1)): 0.5}, 1.0, 0.0)

    def test_non_positive_weight(self, pressure_service, geometry, cantor):
        atlas = geometry.build_atlas(cantor, 1, with_derivatives=True)
        with pytest.raises(ValidationError):
            pressure_service.mixed_sum(atlas, [1.0, 0.0], 1.0, 0.0)

    def test_needs_derivatives(self, pressure_service, geometry, cantor):
        with pytest.raises(ValidationError):
            pressure_service.mixed_sum(geometry.build_atlas(cantor, 1), [0.5, 0.5], 1.0, 0.0)


class TestPressureP:
    def test_normalization(self, pressure_service, cantor, cantor_surrogate):
        bracket = pressure_service.pressure_P(cantor, cantor_surrogate, 1.0, 0.0)
        assert bracket.contains(0.0, atol=1e-14)

    def test_reduces_to_Q(self, pressure_service, cantor, cantor_surrogate):
        bracket = pressure_service.pressure_P(cantor, cantor_surrogate, 0.0, CANTOR_H)
        assert bracket.width == 0.0
        assert bracket.mid == pytest.approx(0.0, abs=1e-12)

    def test_uniform_closed_form(self, pressure_service, cantor, cantor_surrogate):
        bracket = pressure_service.pressure_P(cantor, cantor_surrogate, 2.0, 0.0)
        assert bracket.mid == pytest.approx(-math.log(2), rel=1e-12)

    def test_affine_closed_form(self, pressure_service, golden, golden_surrogate):
        p = np.array([0.5, 0.25]) ** golden_surrogate.h_value
        expected = math.log(np.sum(p ** 1.5 * np.array([0.5, 0.25]) ** 0.3))
        bracket = pressure_service.pressure_P(golden, golden_surrogate, 1.5, 0.3, k_max=6)
        assert bracket.mid == pytest.approx(expected, rel=1e-10)
        assert bracket.width == 0.0

    def test_logistic_bracket_ordered(self, pressure_service, logistic, logistic_surrogate):
        for q, t in [(0.5, 0.3), (1.0, -0.5), (-0.5, 0.8)]:
            bracket = pressure_service.pressure_P(logistic, logistic_surrogate, q, t)
            assert bracket.lo <= bracket.mid <= bracket.hi

    def test_beyond_surrogate_depth(self, pressure_service, cantor, cantor_surrogate):
        with pytest.raises(ValidationError):
            pressure_service.pressure_P(cantor, cantor_surrogate, 1.0, 0.0, k_max=11)


class TestBeta:
    @pytest.mark.parametrize('name,h', [('cantor', CANTOR_H), ('golden', GOLDEN_H)])
    @pytest.mark.parametrize('q', Q_GRID)
    def test_affine_linear_law(self, request, pressure_service, name, h, q):
        system = request.getfixturevalue(name)
        enclosure = pressure_service.beta(system, request.getfixturevalue(f"{name}_surrogate"), q)
        assert enclosure.contains(h * (1 - q), atol=1e-8)
        assert enclosure.estimate == pytest.approx(h * (1 - q), abs=1e-8)

    @pytest.mark.parametrize('q', Q_GRID)
    def test_logistic_linear_law(self, pressure_service, logistic, logistic_surrogate, q):
        # beta(q) = h (1 - q) for the measure of maximal dimension; h is itself an enclosure
        h = logistic_surrogate.h
        low, high = sorted([h.lo * (1 - q), h.hi * (1 - q)])
        enclosure = pressure_service.beta(logistic, logistic_surrogate, q)
        assert enclosure.lo - 1e-9 <= high
        assert low <= enclosure.hi + 1e-9

    def test_golden_dimension_at_zero(self, pressure_service, golden, golden_surrogate):
        assert pressure_service.beta(golden, golden_surrogate, 0.0).estimate == pytest.approx(GOLDEN_H, abs=1e-9)

    def test_logistic_dimension_at_zero(self, pressure_service, logistic, logistic_surrogate):
        enclosure = pressure_service.beta(logistic, logistic_surrogate, 0.0)
        h = logistic_surrogate.h
        assert enclosure.overlaps(h)
        assert abs(enclosure.estimate - h.point) <= 0.05

    def test_logistic_zero_at_one(self, pressure_service, logistic, logistic_surrogate):
        enclosure = pressure_service.beta(logistic, logistic_surrogate, 1.0)
        assert enclosure.contains(0.0)
        assert enclosure.width <= 0.05

    @pytest.mark.parametrize('t', [-0.5, 0.5])
    def test_unit_mass_pressure_sign(self, pressure_service, logistic, logistic_surrogate, t):
        bracket = pressure_service.pressure_P(logistic, logistic_surrogate, 1.0, t)
        if t > 0:
            assert bracket.hi <= -t * math.log(logistic.b) + 1e-12
        else:
            assert bracket.lo >= -t * math.log(logistic.b) - 1e-12


class TestKappa:
    def test_cantor(self, pressure_service, cantor, cantor_surrogate):
        result = pressure_service.kappa(cantor, cantor_surrogate, 2.0)
        assert result.kappa_mid == pytest.approx(CANTOR_H, abs=1e-8)
        assert result.q.estimate == pytest.approx(CANTOR_H / (CANTOR_H + 2), abs=1e-9)
        assert result.report.passed

    def test_golden(self, pressure_service, golden, golden_surrogate):
        result = pressure_service.kappa(golden, golden_surrogate, 1.0)
        assert result.kappa_mid == pytest.approx(GOLDEN_H, abs=1e-8)
        assert result.kappa_from_beta == pytest.approx(result.kappa_mid, abs=1e-8)
        assert result.report.get('level_sum_bounds').passed

    def test_matches_self_similar_equation(self, pressure_service, golden, golden_surrogate):
        reference = self_similar_kappa([0.5, 0.25], [0.5 ** GOLDEN_H, 0.25 ** GOLDEN_H], 1.5)
        result = pressure_service.kappa(golden, golden_surrogate, 1.5)
        assert result.kappa_mid == pytest.approx(reference, abs=1e-8)

    @pytest.mark.slow
    def test_logistic_contains_dimension(self, pressure_service, logistic, logistic_surrogate):
        result = pressure_service.kappa(logistic, logistic_surrogate, 2.0)
        h = logistic_surrogate.h
        assert result.kappa_lo <= h.hi and result.kappa_hi >= h.lo

    def test_rejects_non_positive_order(self, pressure_service, cantor, cantor_surrogate):
        with pytest.raises(ValidationError):
            pressure_service.kappa(cantor, cantor_surrogate, 0.0)


class TestSelfSimilarKappa:
    def test_dimension_for_natural_measure(self):
        p = [(1 / 3) ** CANTOR_H] * 2
        assert self_similar_kappa([1 / 3, 1 / 3], np.array(p) / sum(p), 2.0) == pytest.approx(CANTOR_H, abs=1e-12)

    def test_non_uniform_probabilities_solve_equation(self):
        kappa = self_similar_kappa([1 / 3, 1 / 3], [0.3, 0.7], 2.0)
        exponent = kappa / (2.0 + kappa)
        total = (0.3 * (1 / 9)) ** exponent + (0.7 * (1 / 9)) ** exponent
        assert total == pytest.approx(1.0, abs=1e-12)
        assert kappa < CANTOR_H

    def test_rejects_bad_probabilities(self):
        with pytest.raises(ValidationError):
            self_similar_kappa([0.5, 0.25], [0.5, 0.6], 1.0)


class TestTemperatureCurve:
    def test_cantor_curve(self, pressure_service, cantor, cantor_surrogate):
        curve = pressure_service.temperature_curve(cantor, cantor_surrogate, Q_GRID, r_values=[1.0, 2.0])
        np.testing.assert_allclose(curve.beta_mid, CANTOR_H * (1 - curve.q), atol=1e-9)
        assert len(curve.figure1) == 2
        for row in curve.figure1:
            assert row.intercept == pytest.approx(CANTOR_H, abs=1e-8)

        frame = curve.figure1_frame()
        assert list(frame.columns) == ['r', 'q_r', 'beta_at_qr', 'kappa_r_lo', 'kappa_r_hi']

    def test_thread_pool_mapper(self, pressure_service, golden, golden_surrogate):
        with ThreadPoolExecutor(max_workers=2) as pool:
            curve = pressure_service.temperature_curve(golden, golden_surrogate, [0.0, 1.0], mapper=pool.map)
        assert curve.points[0].beta_mid == pytest.approx(GOLDEN_H, abs=1e-9)
        assert curve.points[1].beta_mid == pytest.approx(0.0, abs=1e-9)

    def test_unsorted_grid(self, pressure_service, cantor, cantor_surrogate):
        with pytest.raises(ValidationError):
            pressure_service.temperature_curve(cantor, cantor_surrogate, [1.0, 0.0])

    def test_shape_check(self, pressure_service, cantor, cantor_surrogate):
        curve = pressure_service.temperature_curve(cantor, cantor_surrogate, Q_GRID)
        report = pressure_service.check_curve_shape(cantor, cantor_surrogate, curve)
        assert report.passed, report.to_frame()

    def test_shape_check_flags_increase(self, pressure_service, cantor, cantor_surrogate):
        points = [PressurePoint(q, b, b, b) for q, b in [(0.0, 0.5), (1.0, 0.6), (2.0, -0.6)]]
        report = pressure_service.check_curve_shape(cantor, cantor_surrogate, PressureCurve(points=points))
        assert not report.get('beta_strictly_decreasing').passed


def _curve(q, beta, width=0.0):
    return PressureCurve(points=[PressurePoint(a, b - width / 2, b, b + width / 2) for a, b in zip(q, beta)])


class TestLegendreSpectrum:
    def test_line_collapses_to_point(self, pressure_service):
        q = np.linspace(-2, 2, 9)
        spectrum = pressure_service.legendre_spectrum(_curve(q, CANTOR_H * (1 - q)))
        np.testing.assert_allclose(spectrum['alpha'], CANTOR_H, atol=1e-12)
        np.testing.assert_allclose(spectrum['f_alpha'], CANTOR_H, atol=1e-12)

    def test_identity_at_one(self, pressure_service):
        q = np.array([0.0, 0.5, 1.0, 1.5])
        spectrum = pressure_service.legendre_spectrum(_curve(q, 0.7 * (1 - q)))
        row = spectrum[spectrum['q'] == 1.0].iloc[0]
        assert row['f_alpha'] == pytest.approx(row['alpha'])

    def test_quadratic_stencil(self, pressure_service):
        q = np.array([-1.0, 0.0, 1.0])
        spectrum = pressure_service.legendre_spectrum(_curve(q, 1 - q ** 2))
        assert spectrum['alpha'][1] == pytest.approx(0.0, abs=1e-14)
        assert spectrum['f_alpha'][1] == pytest.approx(1.0)

    def test_wide_brackets_flagged(self, pressure_service):
        q = np.array([0.0, 0.1, 0.2])
        spectrum = pressure_service.legendre_spectrum(_curve(q, 1 - q, width=0.5))
        assert spectrum['flagged'].all()

    def test_end_samples_flagged(self, pressure_service):
        q = np.linspace(-1, 1, 5)
        spectrum = pressure_service.legendre_spectrum(_curve(q, 1 - q ** 2))
        assert spectrum['flagged'].tolist() == [True, False, False, False, True]

    def test_too_few_samples(self, pressure_service):
        with pytest.raises(InsufficientDataError):
            pressure_service.legendre_spectrum(_curve([0.0, 1.0], [1.0, 0.0]))

    def test_curve_export_columns(self, pressure_service):
        q = np.linspace(0, 1, 3)
        curve = _curve(q, 1 - q)
        frame = curve.to_frame(pressure_service.legendre_spectrum(curve))
        assert list(frame.columns) == ['q', 'beta_lo', 'beta_mid', 'beta_hi', 'alpha', 'f_alpha']
