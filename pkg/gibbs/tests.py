import math

import numpy as np
import pytest

from core.exceptions import EnumerationCapError, ValidationError
from gibbs.models import CylinderWeight, DiscreteMeasure1D
from gibbs.repositories import WeightRepository
from gibbs.services import GibbsService
from words.models import EMPTY_WORD, Antichain, Word

CANTOR_H = math.log(2) / math.log(3)
GOLDEN_H = math.log((1 + math.sqrt(5)) / 2) / math.log(2)


class TestDiscreteMeasure:
    def test_rejects_unsorted_atoms(self):
        with pytest.raises(ValidationError):
            DiscreteMeasure1D(atoms=[0.5, 0.2], weights=[0.5, 0.5])

    def test_rejects_bad_mass(self):
        with pytest.raises(ValidationError):
            DiscreteMeasure1D(atoms=[0.2, 0.5], weights=[0.5, 0.6])

    def test_normalized_sorts(self):
        measure = DiscreteMeasure1D.normalized([0.9, 0.1], [3.0, 1.0])
        np.testing.assert_allclose(measure.atoms, [0.1, 0.9])
        np.testing.assert_allclose(measure.weights, [0.25, 0.75])

    def test_scaled_keeps_radius_proportional(self):
        measure = DiscreteMeasure1D(atoms=[0.0, 1.0], weights=[0.5, 0.5], radius=0.1).scaled(2.0)
        assert measure.radius == pytest.approx(0.2)
        np.testing.assert_allclose(measure.atoms, [0.0, 2.0])


class TestWeightRepository:
    def test_write_once(self):
        repository = WeightRepository()
        record = CylinderWeight(word=Word((1,)), lo=0.4, mid=0.5, hi=0.6)
        repository.create(record.word, record)
        with pytest.raises(ValidationError):
            repository.create(record.word, record)
        assert repository.get_by_id(Word((1,))).mid == 0.5


class TestNuN:
    def test_cantor_half(self, gibbs_service, cantor):
        for n in (0, 1, 5):
            assert gibbs_service.nu_n(cantor, Word((1,)), n, CANTOR_H) == pytest.approx(0.5, rel=1e-12)

    def test_empty_word(self, gibbs_service, logistic):
        assert gibbs_service.nu_n(logistic, EMPTY_WORD, 4, 0.4) == pytest.approx(1.0, rel=1e-12)

    def test_golden_factorizes(self, gibbs_service, golden):
        assert gibbs_service.nu_n(golden, Word((2,)), 1, GOLDEN_H) == pytest.approx(0.25 ** GOLDEN_H, rel=1e-12)

    def test_logistic_within_distortion_bracket(self, gibbs_service, geometry, logistic):
        word = Word((1, 2))
        h = 0.43
        value = gibbs_service.nu_n(logistic, word, 6, h)
        diam_h = geometry.cylinder_diameter(logistic, word) ** h
        log_bound = 9 * h * math.log(logistic.xi)
        assert -log_bound <= math.log(value / diam_h) <= log_bound

    def test_cap(self, geometry, cantor):
        service = GibbsService(geometry=geometry, cap=100)
        with pytest.raises(EnumerationCapError):
            service.nu_n(cantor, Word((1,)), 8, CANTOR_H)


class TestSurrogate:
    def test_cantor_weights_are_dyadic(self, gibbs_service, cantor_surrogate):
        for word in (Word((1,)), Word((2, 1, 2)), Word((1,) * 10)):
            weight = gibbs_service.measure_weight(cantor_surrogate, word)
            assert weight.mid == 2.0 ** -len(word)
            assert weight.lo == weight.hi == weight.mid
        assert np.all(cantor_surrogate.level_weights(6).spread == 0)

    def test_root_weight(self, gibbs_service, logistic_surrogate):
        assert gibbs_service.measure_weight(logistic_surrogate, EMPTY_WORD).mid == 1.0

    def test_constants_collapse_for_affine(self, cantor_surrogate, golden_surrogate):
        assert cantor_surrogate.eta == cantor_surrogate.L == 1.0
        assert golden_surrogate.exact

    def test_golden_weights_are_products(self, gibbs_service, golden_surrogate):
        weight = gibbs_service.measure_weight(golden_surrogate, Word((2, 1, 2)))
        assert weight.mid == pytest.approx((0.25 ** 2 * 0.5) ** GOLDEN_H, rel=1e-12)

    def test_logistic_weight_bracketed(self, gibbs_service, geometry, logistic, logistic_surrogate):
        word = Word((1, 2))
        weight = gibbs_service.measure_weight(logistic_surrogate, word)
        h = logistic_surrogate.h
        diam = geometry.cylinder_diameter(logistic, word)
        assert weight.lo <= weight.mid <= weight.hi
        assert diam ** h.hi / logistic_surrogate.eta <= weight.mid <= diam ** h.lo * logistic_surrogate.eta

    def test_sibling_additivity(self, logistic_surrogate):
        for k in range(1, 6):
            children = logistic_surrogate.level_weights(k).mid.reshape(-1, 2).sum(axis=1)
            np.testing.assert_allclose(children, logistic_surrogate.level_weights(k - 1).mid, rtol=1e-13)

    def test_weight_beyond_depth(self, gibbs_service, cantor_surrogate):
        weight = gibbs_service.measure_weight(cantor_surrogate, Word((1,) * 12))
        assert weight.mid == pytest.approx(2.0 ** -12, rel=1e-12)

    def test_level_outside_surrogate(self, cantor_surrogate):
        with pytest.raises(ValidationError):
            cantor_surrogate.level_weights(11)

    def test_invalid_window(self, gibbs_service, logistic):
        with pytest.raises(ValidationError):
            gibbs_service.build_surrogate(logistic, window=(5, 3), depth=2)


class TestDiscretize:
    def test_cantor_level_one(self, gibbs_service, cantor_surrogate):
        measure = gibbs_service.discrete_measure(cantor_surrogate, 1)
        np.testing.assert_allclose(measure.atoms, [1 / 6, 5 / 6])
        np.testing.assert_allclose(measure.weights, [0.5, 0.5])
        assert measure.radius == pytest.approx(1 / 3)

    def test_cantor_level_two(self, gibbs_service, cantor_surrogate):
        measure = gibbs_service.discrete_measure(cantor_surrogate, 2)
        np.testing.assert_allclose(measure.atoms, [1 / 18, 5 / 18, 13 / 18, 17 / 18])
        np.testing.assert_allclose(measure.weights, 0.25)

    def test_root_cylinder(self, gibbs_service, logistic_surrogate):
        measure = gibbs_service.discrete_measure(logistic_surrogate, 0)
        assert len(measure) == 1
        assert measure.weights[0] == 1.0

    def test_left_rule(self, gibbs_service, cantor_surrogate):
        measure = gibbs_service.discrete_measure(cantor_surrogate, 1, atom_rule='left')
        np.testing.assert_allclose(measure.atoms, [0.0, 2 / 3])

    def test_unknown_rule(self, gibbs_service, cantor_surrogate):
        with pytest.raises(ValidationError):
            gibbs_service.discrete_measure(cantor_surrogate, 1, atom_rule='right')

    def test_logistic_mass(self, gibbs_service, logistic_surrogate):
        measure = gibbs_service.discrete_measure(logistic_surrogate, 8)
        assert len(measure) == 256
        assert measure.weights.sum() == pytest.approx(1.0, abs=1e-12)


class TestGibbsBracketCheck:
    def test_cantor_exact(self, gibbs_service, cantor_surrogate):
        report = gibbs_service.gibbs_bracket_check(cantor_surrogate, 8)
        assert report.passed
        assert report.get('gibbs_bracket').worst == pytest.approx(1.0, abs=1e-9)
        assert report.get('measure_quasi_multiplicativity').worst == pytest.approx(1.0, abs=1e-12)

    def test_golden_products(self, gibbs_service, golden_surrogate):
        report = gibbs_service.gibbs_bracket_check(golden_surrogate, 8)
        assert report.passed
        assert report.get('measure_quasi_multiplicativity').worst == pytest.approx(1.0, abs=1e-12)

    def test_logistic_within_constants(self, gibbs_service, logistic_surrogate):
        report = gibbs_service.gibbs_bracket_check(logistic_surrogate, 8)
        assert report.passed, report.to_frame()
        assert report.get('measure_quasi_multiplicativity').worst <= logistic_surrogate.L

    def test_depth_beyond_surrogate(self, gibbs_service, cantor_surrogate):
        with pytest.raises(ValidationError):
            gibbs_service.gibbs_bracket_check(cantor_surrogate, 12)


class TestAntichainComparison:
    def test_golden_antichain(self, gibbs_service, golden_surrogate):
        antichain = Antichain.of([Word((1, 1)), Word((1, 2)), Word((2,))])
        check = gibbs_service.compare_over_antichain(golden_surrogate, antichain, depth=6)
        assert check.passed
        assert check.worst == pytest.approx(1.0, abs=1e-12)

    def test_logistic_antichain(self, gibbs_service, logistic_surrogate):
        antichain = Antichain.of([Word((1,)), Word((2, 1)), Word((2, 2))])
        assert gibbs_service.compare_over_antichain(logistic_surrogate, antichain, depth=8).passed


class TestWindowStability:
    def test_affine_has_no_spread(self, gibbs_service, golden_surrogate):
        frame = gibbs_service.window_stability(golden_surrogate)
        assert len(frame) == 10
        assert (frame['max_spread'] == 0).all()

    def test_spread_by_start(self, gibbs_service, logistic, logistic_surrogate):
        frame = gibbs_service.spread_by_window_start(logistic, logistic_surrogate.h_value, 3, [1, 4], 2)
        assert list(frame['n0']) == [1, 4]
        assert (frame['max_spread'] >= 0).all()


class TestMeasureExport:
    def test_columns(self, gibbs_service, cantor_surrogate):
        frame = gibbs_service.measure_frame(cantor_surrogate, 2)
        assert list(frame.columns) == ['word', 'left', 'right', 'diam', 'w_lo', 'w_mid', 'w_hi']
        assert list(frame['word']) == ['1.1', '1.2', '2.1', '2.2']
