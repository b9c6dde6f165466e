import itertools
import math
from functools import lru_cache

import factory.random
import numpy as np
import pytest
from scipy.optimize import minimize_scalar

from core.exceptions import InsufficientDataError, SaturatedCurveError, ValidationError
from gibbs.models import DiscreteMeasure1D
from quantizer.costs import ClusterCostTable, cluster_cost
from quantizer.factories import DiscreteMeasureFactory
from quantizer.models import ErrorCurve
from quantizer.services import cheapest_allocation, proportional_allocation
from words.models import Antichain, Word

CANTOR_H = math.log(2) / math.log(3)
ORDERS = (0.5, 1.0, 2.0, 3.0)


def brute_force_error(atoms, weights, n, r):
    """Minimum over every split into at most n contiguous runs, each run minimized on its own"""

    @lru_cache(maxsize=None)
    def run_cost(i, j):
        x, w = atoms[i:j + 1], weights[i:j + 1]
        if r == 2:
            center = np.sum(w * x) / np.sum(w)
            return float(np.sum(w * (x - center) ** 2))
        if r <= 1:
            return float(min(np.sum(w * np.abs(x - a) ** r) for a in x))
        if i == j:
            return 0.0
        result = minimize_scalar(
            lambda a: np.sum(w * np.abs(x - a) ** r), bounds=(x[0], x[-1]), method='bounded',
            options={'xatol': 1e-13},
        )
        return float(result.fun)

    m = len(atoms)
    if n >= m:
        return 0.0
    best = math.inf
    for clusters in range(1, n + 1):
        for cuts in itertools.combinations(range(1, m), clusters - 1):
            bounds = (0,) + cuts + (m,)
            best = min(best, sum(run_cost(a, b - 1) for a, b in zip(bounds, bounds[1:])))
    return best


def brute_force_constrained_error(atoms, weights, n, r):
    """Minimum over every subset served by centers; the rest pay their distance to {0, 1}"""
    boundary_cost = weights * np.minimum(atoms, 1.0 - atoms) ** r
    best = math.inf
    for mask in itertools.product((False, True), repeat=len(atoms)):
        served = np.array(mask)
        cost = float(np.sum(boundary_cost[~served]))
        if served.any():
            cost += brute_force_error(atoms[served], weights[served], n, r)
        best = min(best, cost)
    return best


@pytest.fixture
def random_measures():
    factory.random.reseed_random(20240917)
    return DiscreteMeasureFactory.build_batch(50)


@pytest.fixture(scope='module')
def cantor_level9_curve(quantizer_service, gibbs_service, cantor_surrogate):
    measure = gibbs_service.discrete_measure(cantor_surrogate, 9)
    return quantizer_service.error_curve(measure, 2.0, [2 ** j for j in range(1, 8)])


@pytest.fixture(scope='module')
def logistic_level9_curve(quantizer_service, gibbs_service, logistic_surrogate):
    measure = gibbs_service.discrete_measure(logistic_surrogate, 9)
    return quantizer_service.error_curve(measure, 2.0, [2 ** j for j in range(8)])


class TestClusterCost:
    def test_squared_error_is_variance(self):
        assert cluster_cost([0.0, 1.0], [0.5, 0.5], 0, 1, 2.0) == pytest.approx((0.5, 0.25))

    def test_median_tie_takes_midpoint(self):
        assert cluster_cost([0.0, 1.0], [0.5, 0.5], 0, 1, 1.0) == pytest.approx((0.5, 0.5))

    def test_small_order_scans_atoms(self):
        center, cost = cluster_cost([0.0, 0.5, 1.0], [0.25, 0.5, 0.25], 0, 2, 0.5)
        assert center == 0.5
        assert cost == pytest.approx(math.sqrt(2) / 4, rel=1e-14)

    def test_cubic_matches_scipy(self):
        atoms = np.array([0.1, 0.2, 0.45, 0.9])
        weights = np.array([0.4, 0.1, 0.3, 0.2])
        center, cost = cluster_cost(atoms, weights, 0, 3, 3.0)
        reference = minimize_scalar(lambda a: np.sum(weights * np.abs(atoms - a) ** 3), bounds=(0.1, 0.9), method='bounded')
        assert center == pytest.approx(reference.x, abs=1e-6)
        assert cost <= reference.fun + 1e-12

    def test_golden_tolerance_from_settings(self, monkeypatch):
        from quantdim import settings
        from quantizer import costs

        atoms = np.array([0.1, 0.2, 0.45, 0.9])
        weights = np.array([0.4, 0.1, 0.3, 0.2])
        calls = []
        objective = costs._masked_objective
        monkeypatch.setattr(costs, '_masked_objective', lambda *args: calls.append(1) or objective(*args))

        fine_center, _ = cluster_cost(atoms, weights, 0, 3, 3.0)
        fine_calls = len(calls)
        calls.clear()
        monkeypatch.setattr(settings, 'GOLDEN_TOL', 1e-2)
        coarse_center, _ = cluster_cost(atoms, weights, 0, 3, 3.0)

        assert len(calls) < fine_calls
        assert coarse_center == pytest.approx(fine_center, abs=1e-2)

    def test_single_atom(self):
        assert cluster_cost([0.3], [1.0], 0, 0, 3.0) == pytest.approx((0.3, 0.0), abs=1e-12)

    def test_empty_range(self):
        with pytest.raises(ValidationError):
            cluster_cost([0.0, 1.0], [0.5, 0.5], 1, 0, 2.0)

    def test_order_must_be_positive(self):
        with pytest.raises(ValidationError):
            cluster_cost([0.0, 1.0], [0.5, 0.5], 0, 1, 0.0)


class TestCostTable:
    @pytest.mark.parametrize('r', ORDERS)
    def test_table_matches_single_cluster_costs(self, r, random_measures):
        measure = next(m for m in random_measures if len(m) >= 6)
        table = ClusterCostTable(measure.atoms, measure.weights, r)
        for i in range(len(measure)):
            for j in range(i, len(measure)):
                _, cost = cluster_cost(measure.atoms, measure.weights, i, j, r)
                assert table.cost[i, j] == pytest.approx(cost, rel=1e-9, abs=1e-15)
            assert np.all(np.isinf(table.cost[i, :i]))

    def test_constrained_costs_never_exceed_unconstrained(self, random_measures):
        measure = random_measures[0]
        plain = ClusterCostTable(measure.atoms, measure.weights, 2.0)
        capped = ClusterCostTable(measure.atoms, measure.weights, 2.0, boundary=(0.0, 1.0))
        upper = np.triu_indices(len(measure))
        assert np.all(capped.cost[upper] <= plain.cost[upper] + 1e-15)

    def test_bad_boundary(self):
        with pytest.raises(ValidationError):
            ClusterCostTable([0.5], [1.0], 1.0, boundary=(1.0, 0.0))


class TestOptimalQuantizer:
    def test_two_atoms_one_center(self, quantizer_service):
        measure = DiscreteMeasure1D(atoms=[0.0, 1.0], weights=[0.5, 0.5])
        result = quantizer_service.optimal_quantizer(measure, 1, 2.0)
        assert result.error == pytest.approx(0.25)
        np.testing.assert_allclose(result.centers, [0.5])
        assert len(result.boundaries) == 0

    def test_exact_cover(self, quantizer_service, random_measures):
        measure = random_measures[1]
        result = quantizer_service.optimal_quantizer(measure, len(measure) + 2, 0.5)
        assert result.error == 0.0
        np.testing.assert_array_equal(result.centers, measure.atoms)

    def test_cantor_level_two(self, quantizer_service, gibbs_service, cantor_surrogate):
        measure = gibbs_service.discrete_measure(cantor_surrogate, 2)
        result = quantizer_service.optimal_quantizer(measure, 2, 2.0)
        np.testing.assert_allclose(result.centers, [1 / 6, 5 / 6])
        np.testing.assert_allclose(result.boundaries, [0.5])
        assert result.error == pytest.approx(1 / 81, rel=1e-12)
        assert result.starts == (0, 2)
        np.testing.assert_allclose(result.cluster_masses, [0.5, 0.5])

    def test_matches_brute_force(self, quantizer_service, random_measures):
        cases = 0
        for measure, r in zip(random_measures * 4, np.repeat(ORDERS, len(random_measures))):
            for n in range(1, 5):
                dp = quantizer_service.optimal_quantizer(measure, n, float(r)).error
                oracle = brute_force_error(measure.atoms, measure.weights, n, float(r))
                assert dp == pytest.approx(oracle, rel=1e-9, abs=1e-12), (measure.atoms, n, r)
                assert dp <= oracle + 1e-12
                cases += 1
        assert cases == 800

    def test_clusters_are_nearest_center_cells(self, quantizer_service, random_measures):
        for measure in random_measures[:10]:
            n = min(3, len(measure))
            result = quantizer_service.optimal_quantizer(measure, n, 2.0)
            bounds = list(result.starts) + [len(measure)]
            for k in range(result.n):
                for x in measure.atoms[bounds[k]:bounds[k + 1]]:
                    assert abs(x - result.centers[k]) <= np.min(np.abs(x - result.centers)) + 1e-12

    def test_at_least_one_center(self, quantizer_service, random_measures):
        with pytest.raises(ValidationError):
            quantizer_service.optimal_quantizer(random_measures[0], 0, 2.0)

    def test_export_columns(self, quantizer_service, gibbs_service, cantor_surrogate):
        measure = gibbs_service.discrete_measure(cantor_surrogate, 3)
        frame = quantizer_service.optimal_quantizer(measure, 4, 2.0).to_frame()
        assert list(frame.columns) == ['center_index', 'position', 'cluster_mass', 'cluster_cost']
        assert frame['cluster_mass'].sum() == pytest.approx(1.0)


class TestConstrainedError:
    def test_boundary_only(self, quantizer_service):
        measure = DiscreteMeasure1D(atoms=[0.5], weights=[1.0])
        assert quantizer_service.constrained_error(measure, 0, 1.0) == pytest.approx(0.5)

    def test_cantor_level_one(self, quantizer_service, gibbs_service, cantor_surrogate):
        measure = gibbs_service.discrete_measure(cantor_surrogate, 1)
        assert quantizer_service.constrained_error(measure, 1, 1.0) == pytest.approx(1 / 12, rel=1e-12)

    def test_exact_cover(self, quantizer_service, random_measures):
        measure = random_measures[2]
        assert quantizer_service.constrained_error(measure, len(measure), 2.0) == 0.0

    @pytest.mark.parametrize('r', ORDERS)
    def test_below_unconstrained(self, r, quantizer_service, random_measures):
        for measure in random_measures[:20]:
            for n in range(1, 5):
                u = quantizer_service.constrained_error(measure, n, r)
                V = quantizer_service.optimal_quantizer(measure, n, r).error
                assert u <= V * (1 + 1e-12) + 1e-15

    @pytest.mark.parametrize('r', ORDERS)
    def test_matches_subset_enumeration(self, r, quantizer_service, random_measures):
        small = [m for m in random_measures if len(m) <= 5][:8]
        for measure in small:
            values = quantizer_service.constrained_curve(measure, r, 2)
            for n in (1, 2):
                expected = brute_force_constrained_error(measure.atoms, measure.weights, n, r)
                assert values[n] == pytest.approx(expected, rel=1e-8, abs=1e-14)

    def test_support_outside_boundary(self, quantizer_service):
        measure = DiscreteMeasure1D(atoms=[0.5, 1.5], weights=[0.5, 0.5])
        with pytest.raises(ValidationError):
            quantizer_service.constrained_error(measure, 1, 2.0)

    def test_negative_count(self, quantizer_service, random_measures):
        with pytest.raises(ValidationError):
            quantizer_service.constrained_error(random_measures[0], -1, 2.0)


class TestErrorCurve:
    def test_cantor_level_six(self, quantizer_service, gibbs_service, cantor_surrogate):
        measure = gibbs_service.discrete_measure(cantor_surrogate, 6)
        curve = quantizer_service.error_curve(measure, 2.0, range(1, 65))
        assert np.all(curve.V[:-1] > 0)
        assert curve.V[-1] == 0.0
        assert np.all(np.diff(curve.V) < 0)
        assert curve.atom_count == 64

    def test_point_mass(self, quantizer_service):
        measure = DiscreteMeasure1D(atoms=[0.3], weights=[1.0])
        assert quantizer_service.error_curve(measure, 1.5, [1]).V[0] == 0.0

    def test_matches_single_quantizers(self, quantizer_service, random_measures):
        measure = random_measures[3]
        curve = quantizer_service.error_curve(measure, 3.0, [1, 2, 3])
        for n, V in zip(curve.n_values, curve.V):
            assert V == quantizer_service.optimal_quantizer(measure, int(n), 3.0).error

    def test_grid_must_increase(self, quantizer_service, random_measures):
        with pytest.raises(ValidationError):
            quantizer_service.error_curve(random_measures[0], 2.0, [4, 2])
        with pytest.raises(ValidationError):
            quantizer_service.error_curve(random_measures[0], 2.0, [0, 1])

    def test_frame(self):
        curve = ErrorCurve(r=2.0, n_values=np.array([1, 2]), V=np.array([0.25, 0.04]), kappa=1.0)
        frame = curve.to_frame()
        assert list(frame.columns) == ['n', 'V', 'e', 'coeff']
        np.testing.assert_allclose(frame['e'], [0.5, 0.2])
        np.testing.assert_allclose(frame['coeff'], [0.5, 0.4])


class TestEstimateDr:
    def test_exact_power_law(self, quantizer_service):
        n = np.array([1, 2, 4, 8, 16, 32])
        curve = ErrorCurve(r=2.0, n_values=n, V=n ** (-2.0 / 0.7))
        estimate = quantizer_service.estimate_Dr(curve)
        assert estimate.slope == pytest.approx(0.7, rel=1e-12)
        assert estimate.width == pytest.approx(0.0, abs=1e-9)
        assert estimate.r_squared == pytest.approx(1.0)

    @pytest.mark.slow
    def test_cantor_level_nine(self, quantizer_service, cantor_level9_curve):
        estimate = quantizer_service.estimate_Dr(cantor_level9_curve)
        assert estimate.n_used == (2, 4, 8, 16, 32)
        assert estimate.slope == pytest.approx(CANTOR_H, rel=0.05)

    @pytest.mark.slow
    def test_logistic_level_nine(self, quantizer_service, logistic_level9_curve, logistic_surrogate):
        estimate = quantizer_service.estimate_Dr(logistic_level9_curve)
        assert estimate.slope == pytest.approx(logistic_surrogate.h.point, rel=0.10)

    def test_zero_in_range(self, quantizer_service):
        curve = ErrorCurve(r=1.0, n_values=np.array([1, 2, 3, 4]), V=np.array([0.5, 0.2, 0.1, 0.0]))
        with pytest.raises(SaturatedCurveError):
            quantizer_service.estimate_Dr(curve)

    def test_saturated_points_dropped(self, quantizer_service):
        n = np.array([1, 2, 4, 8, 16])
        V = np.append(n[:-1] ** -2.0, 0.0)
        estimate = quantizer_service.estimate_Dr(ErrorCurve(r=1.0, n_values=n, V=V, atom_count=16))
        assert estimate.n_used == (1, 2, 4, 8)

    def test_too_few_points(self, quantizer_service):
        curve = ErrorCurve(r=1.0, n_values=np.array([1, 2, 3, 4]), V=np.array([0.5, 0.2, 0.1, 0.05]))
        with pytest.raises(InsufficientDataError):
            quantizer_service.estimate_Dr(curve, fit_range=(3, 4))


class TestCoefficientBand:
    def test_exact_power_law(self, quantizer_service):
        n = np.array([1, 2, 4, 8, 16])
        band = quantizer_service.coefficient_band(ErrorCurve(r=2.0, n_values=n, V=n ** (-2.0 / 0.6)), 0.6)
        assert band.lo == pytest.approx(1.0) and band.hi == pytest.approx(1.0)
        assert not band.diverging

    @pytest.mark.slow
    def test_cantor_band_bounded(self, quantizer_service, cantor_level9_curve):
        band = quantizer_service.coefficient_band(cantor_level9_curve, CANTOR_H)
        assert 0 < band.lo <= band.hi
        assert band.ratio <= 20
        assert not band.diverging

    @pytest.mark.slow
    def test_wrong_kappa_diverges(self, quantizer_service, cantor_level9_curve):
        band = quantizer_service.coefficient_band(cantor_level9_curve, CANTOR_H / 2)
        assert band.diverging
        assert band.growth == pytest.approx(0.5, abs=0.1)

    def test_kappa_must_be_positive(self, quantizer_service):
        n = np.array([1, 2, 4])
        with pytest.raises(ValidationError):
            quantizer_service.coefficient_band(ErrorCurve(r=2.0, n_values=n, V=1.0 / n), 0.0)


class TestAllocation:
    def test_proportional_equal_shares(self):
        np.testing.assert_array_equal(proportional_allocation(np.array([1.0, 1.0]), 4), [2, 2])

    def test_proportional_floor_at_one(self):
        np.testing.assert_array_equal(proportional_allocation(np.array([0.01, 0.99]), 3), [1, 2])

    def test_proportional_gives_back(self):
        np.testing.assert_array_equal(proportional_allocation(np.array([0.001, 0.001, 0.998]), 3), [1, 1, 1])

    def test_proportional_needs_budget(self):
        with pytest.raises(ValidationError):
            proportional_allocation(np.array([1.0, 1.0, 1.0]), 2)

    def test_cheapest(self):
        value, allocation = cheapest_allocation(
            np.array([1.0, 1.0]), np.array([[4.0, 1.0, 0.0], [4.0, 2.0, 0.0]]), 2
        )
        assert value == 3.0
        np.testing.assert_array_equal(allocation, [1, 1])


class TestAntichainBoundCheck:
    def test_cantor_level_one(self, quantizer_service, cantor_surrogate):
        antichain = Antichain.of([Word((1,)), Word((2,))])
        report = quantizer_service.antichain_bound_check(cantor_surrogate, antichain, 4, 2.0, CANTOR_H)
        assert report.passed, report.to_frame()
        upper = report.get('upper_recursion')
        assert upper.witness == '1:2 2:2'
        assert upper.worst == pytest.approx(0.0, abs=1e-12)

    def test_cantor_level_two_sum_is_one(self, quantizer_service, cantor_surrogate):
        antichain = Antichain.of([Word((a, b)) for a in (1, 2) for b in (1, 2)])
        report = quantizer_service.antichain_bound_check(cantor_surrogate, antichain, 6, 2.0, CANTOR_H)
        assert report.passed, report.to_frame()
        assert report.get('antichain_sum_bounds').worst == pytest.approx(1.0, rel=1e-12)

    @pytest.mark.parametrize('surrogate_name', ['golden_surrogate', 'logistic_surrogate'])
    @pytest.mark.parametrize('words', [
        [Word((1,)), Word((2,))],
        [Word((1, 1)), Word((1, 2)), Word((2, 1)), Word((2, 2))],
    ])
    def test_shipped_systems(self, request, quantizer_service, surrogate_name, words):
        surrogate = request.getfixturevalue(surrogate_name)
        for r in (1.0, 2.0):
            report = quantizer_service.antichain_bound_check(
                surrogate, Antichain.of(words), 2 * len(words), r, surrogate.h_value
            )
            assert report.passed, report.to_frame()

    def test_needs_enough_centers(self, quantizer_service, cantor_surrogate):
        antichain = Antichain.of([Word((1,)), Word((2,))])
        with pytest.raises(ValidationError):
            quantizer_service.antichain_bound_check(cantor_surrogate, antichain, 1, 2.0, CANTOR_H)

    def test_rejects_non_maximal(self, quantizer_service, cantor_surrogate):
        with pytest.raises(ValidationError):
            quantizer_service.antichain_bound_check(cantor_surrogate, Antichain.of([Word((1,))]), 2, 2.0, CANTOR_H)


class TestLloyd:
    @pytest.mark.parametrize('r', ORDERS)
    def test_never_beats_dp(self, r, quantizer_service, random_measures):
        for measure in random_measures[:15]:
            n = min(3, len(measure))
            start = measure.atoms[np.linspace(0, len(measure) - 1, n).astype(int)]
            lloyd = quantizer_service.lloyd(measure, start, r)
            assert lloyd.error >= quantizer_service.optimal_quantizer(measure, n, r).error - 1e-12

    def test_fixed_point_at_optimum(self, quantizer_service, gibbs_service, cantor_surrogate):
        measure = gibbs_service.discrete_measure(cantor_surrogate, 4)
        optimum = quantizer_service.optimal_quantizer(measure, 4, 2.0)
        lloyd = quantizer_service.lloyd(measure, optimum.centers, 2.0)
        np.testing.assert_allclose(lloyd.centers, optimum.centers, atol=1e-12)
        assert lloyd.error == pytest.approx(optimum.error, rel=1e-12)


class TestVerifyQuantizer:
    @pytest.mark.parametrize('r', ORDERS)
    def test_cantor_measure(self, r, quantizer_service, gibbs_service, cantor_surrogate):
        measure = gibbs_service.discrete_measure(cantor_surrogate, 4)
        report = quantizer_service.verify_quantizer(measure, r, range(1, 9))
        assert report.passed, report.to_frame()
        assert [c.name for c in report.checks] == [
            'error_monotone', 'constrained_below_unconstrained', 'partition_optimality', 'scaling_covariance',
        ]


class TestConstrainedCostTable:
    @pytest.mark.parametrize('r', ORDERS)
    def test_matches_dense_grid(self, r, random_measures):
        grid = np.linspace(0.0, 1.0, 20001)
        for measure in random_measures[:8]:
            table = ClusterCostTable(measure.atoms, measure.weights, r, boundary=(0.0, 1.0))
            floor = table.boundary_distance
            capped = np.minimum(np.abs(measure.atoms[np.newaxis, :] - grid[:, np.newaxis]), floor) ** r
            grid_best = float(np.min(capped @ measure.weights))
            assert table.cost[0, len(measure) - 1] <= grid_best + 1e-12
            assert table.cost[0, len(measure) - 1] >= grid_best - 1e-3
