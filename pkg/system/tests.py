import math

import numpy as np
import pytest

from core.exceptions import EnumerationCapError, ValidationError
from system.families import affine_system, system_from_definition
from system.models import AffineBranch, LogisticBranch, distortion_from_defining_data
from system.services import GeometryService
from words.models import EMPTY_WORD, Word


class TestSystemModels:
    def test_affine_ratio_range(self):
        with pytest.raises(ValidationError):
            AffineBranch(ratio=1.0, offset=0.0)

    def test_overlapping_images_rejected(self):
        with pytest.raises(ValidationError):
            affine_system([0.5, 0.5], [0.0, 0.4])

    def test_single_branch_rejected(self):
        with pytest.raises(ValidationError):
            affine_system([0.5], [0.0])

    def test_logistic_branch_images(self):
        left = LogisticBranch(index=1).image()
        right = LogisticBranch(index=2).image()
        assert left == pytest.approx((0.0, (5 - math.sqrt(5)) / 10))
        assert right == pytest.approx(((5 + math.sqrt(5)) / 10, 1.0))

    def test_definition_parsing(self):
        system = system_from_definition({'kind': 'affine', 'ratios': [0.5, 0.25], 'offsets': [0, 0.75]}, 'g')
        assert system.is_affine
        assert system.b == 2.0 and system.B == 4.0
        with pytest.raises(ValidationError):
            system_from_definition({'kind': 'henon'})

    def test_orientation_reversing_branch(self):
        system = affine_system([-1 / 3, 1 / 3], [1 / 3, 2 / 3], name='flip')
        assert system.branches[0].image() == pytest.approx((0.0, 1 / 3))


class TestDistortionConstant:
    def test_affine_collapses(self, geometry, cantor):
        assert geometry.distortion_constant(cantor) == 1.0

    def test_logistic(self, geometry, logistic):
        assert math.log(geometry.distortion_constant(logistic)) == pytest.approx(10 / (math.sqrt(5) - 1))

    def test_unit_case(self):
        assert distortion_from_defining_data(1.0, 1.0, 2.0) == pytest.approx(math.e)

    def test_rejects_contracting_bound(self):
        with pytest.raises(ValidationError):
            distortion_from_defining_data(1.0, 1.0, 1.0)


class TestCylinders:
    def test_cantor_intervals(self, geometry, cantor):
        assert geometry.cylinder_interval(cantor, Word((1,))) == pytest.approx((0.0, 1 / 3))
        assert geometry.cylinder_interval(cantor, Word((2, 1))) == pytest.approx((2 / 3, 7 / 9))
        assert geometry.cylinder_interval(cantor, EMPTY_WORD) == (0.0, 1.0)

    def test_logistic_interval(self, geometry, logistic):
        left, right = geometry.cylinder_interval(logistic, Word((1,)))
        assert left == pytest.approx(0.0, abs=1e-15)
        assert right == pytest.approx(0.276393, abs=1e-6)

    def test_symbol_out_of_range(self, geometry, cantor):
        with pytest.raises(ValidationError):
            geometry.cylinder_interval(cantor, Word((3,)))

    def test_affine_sup_derivative(self, geometry, cantor, golden):
        assert geometry.sup_derivative(cantor, Word((1, 2))) == pytest.approx((1 / 9, 1 / 9))
        assert geometry.sup_derivative(golden, Word((2, 2, 1))) == (1 / 32, 1 / 32)

    def test_logistic_sup_derivative_bracket(self, geometry, logistic):
        lo, hi = geometry.sup_derivative(logistic, Word((1,)))
        assert lo == pytest.approx(1 / math.sqrt(5))
        assert lo <= hi

    def test_atlas_matches_single_word_queries(self, geometry, logistic):
        atlas = geometry.build_atlas(logistic, 3, with_derivatives=True)
        for position in (0, 3, 7):
            word = atlas.word(position)
            left, right = geometry.cylinder_interval(logistic, word)
            assert atlas.left[position] == pytest.approx(left)
            assert atlas.right[position] == pytest.approx(right)
            assert atlas.supderiv_lo[position] == pytest.approx(geometry.sup_derivative(logistic, word)[0])

    def test_atlas_affine_diameters_are_products(self, geometry, golden):
        atlas = geometry.build_atlas(golden, 3)
        assert atlas.diam[atlas.index(Word((2, 2, 1)))] == 1 / 32
        assert atlas.diam.sum() == pytest.approx((3 / 4) ** 3)

    def test_atlas_frame_columns(self, geometry, cantor):
        frame = geometry.build_atlas(cantor, 2, with_derivatives=True).to_frame()
        assert list(frame.columns) == ['word', 'left', 'right', 'diam', 'supderiv_lo', 'supderiv_hi']
        assert frame['word'].tolist() == ['1.1', '1.2', '2.1', '2.2']

    def test_atlas_is_cached(self, geometry, cantor):
        assert geometry.build_atlas(cantor, 4) is geometry.build_atlas(cantor, 4)

    def test_atlas_cap(self, cantor):
        with pytest.raises(EnumerationCapError):
            GeometryService(cap=100).build_atlas(cantor, 7)


class TestVerifyDefiningData:
    @pytest.mark.parametrize('name', ['cantor', 'golden'])
    def test_affine_systems_pass_exactly(self, request, geometry, name):
        system = request.getfixturevalue(name)
        report = geometry.verify_defining_data(system, depth=6)
        assert report.passed, report.failures
        assert all(check.exact for check in report.checks)
        assert report.get('diameter_quasi_multiplicativity').worst == pytest.approx(1.0, abs=1e-12)

    def test_logistic_passes(self, geometry, logistic):
        report = geometry.verify_defining_data(logistic, depth=8, grid_points=64)
        assert report.passed, [c.to_dict() for c in report.failures]
        assert report.get('bounded_distortion').worst <= logistic.xi
        assert not report.get('bounded_distortion').exact

    def test_report_lists_every_check(self, geometry, cantor):
        names = {check.name for check in geometry.verify_defining_data(cantor, depth=3).checks}
        assert names == {
            'derivative_bounds', 'bounded_distortion', 'level_diameter_bounds',
            'derivative_diameter_bracket', 'diameter_quasi_multiplicativity',
            'derivative_quasi_multiplicativity', 'child_diameter_ratio', 'cylinder_nesting',
            'cylinder_disjointness', 'distance_contraction', 'open_set_condition',
        }

    def test_understated_distortion_is_reported(self, geometry):
        # a non-affine system declared with too small a Hoelder constant
        from system.families import LOGISTIC_DEFINING_DATA
        from system.models import CookieCutterSystem

        data = dict(LOGISTIC_DEFINING_DATA, c=1e-3)
        system = CookieCutterSystem(
            name='understated',
            branches=(LogisticBranch(index=1), LogisticBranch(index=2)),
            kind='logistic',
            **data,
        )
        report = geometry.verify_defining_data(system, depth=4)
        assert not report.get('bounded_distortion').passed
        assert report.get('bounded_distortion').witness

    def test_frame_export(self, geometry, cantor):
        frame = geometry.verify_defining_data(cantor, depth=2).to_frame()
        assert frame['passed'].all()
        assert np.isin(['check', 'worst', 'witness'], frame.columns).all()
