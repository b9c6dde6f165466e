"""
System Services - cylinder geometry and defining-data validation
"""
import logging
import math
import time
from typing import List, Optional, Tuple

import numpy as np

from core.cache import InMemoryCacheService
from core.exceptions import ValidationError
from core.interfaces.service import ICacheService, ICheckService
from core.reports import CheckResult, VerificationReport
from quantdim import settings
from words.models import Word
from words.services import check_level_cap

from .interfaces import IGeometryService
from .models import CookieCutterSystem, CylinderAtlas, distortion_from_defining_data

logger = logging.getLogger(__name__)


def _pair_witness(flat_index: int, shape: Tuple[int, int], len_a: int, len_b: int, n_branches: int) -> str:
    row, col = np.unravel_index(flat_index, shape)
    sigma = Word.from_index(int(row), len_a, n_branches)
    tau = Word.from_index(int(col), len_b, n_branches)
    return f"sigma={sigma}, tau={tau}"


class GeometryService(IGeometryService, ICheckService):
    """
    Cylinder geometry of cookie-cutter systems
    Level tables are built by prepending one branch at a time,
    J_{j sigma} = phi_j(J_sigma), which keeps lexicographic order and
    vectorizes over the whole level.
    """

    def __init__(self, cache: Optional[ICacheService] = None, cap: Optional[int] = None):
        self.cache = cache or InMemoryCacheService()
        self.cap = settings.ENUMERATION_CAP if cap is None else cap

    # ------------------------------------------------------------------
    # level tables
    # ------------------------------------------------------------------

    def _images(self, system: CookieCutterSystem, level: int):
        """(phi_sigma(0), phi_sigma(1), affine diameters or None) for every sigma in Omega_k"""
        key = ('images', system, level)
        cached = self.cache.get(key)
        if cached is not None:
            return cached

        check_level_cap(system.n_branches, level, self.cap)
        if level == 0:
            result = (
                np.zeros(1, dtype=np.longdouble),
                np.ones(1, dtype=np.longdouble),
                np.ones(1) if system.is_affine else None,
            )
        else:
            img0, img1, diam = self._images(system, level - 1)
            new0 = np.concatenate([branch.value(img0) for branch in system.branches])
            new1 = np.concatenate([branch.value(img1) for branch in system.branches])
            new_diam = None
            if diam is not None:
                new_diam = np.concatenate([abs(branch.ratio) * diam for branch in system.branches])
            result = (new0, new1, new_diam)

        self.cache.set(key, result)
        return result

    def _grid_tables(self, system: CookieCutterSystem, level: int, grid_points: int):
        """(phi_sigma(x_g), |phi'_sigma(x_g)|) on a uniform grid, shape (N^k, G)"""
        key = ('grid', system, level, grid_points)
        cached = self.cache.get(key)
        if cached is not None:
            return cached

        check_level_cap(system.n_branches, level, self.cap)
        if level == 0:
            grid = np.linspace(0.0, 1.0, grid_points, dtype=np.longdouble)
            result = (grid[np.newaxis, :], np.ones((1, grid_points), dtype=np.longdouble))
        else:
            values, derivs = self._grid_tables(system, level - 1, grid_points)
            # chain rule: |phi'_{j sigma}(x)| = |phi'_j(phi_sigma(x))| |phi'_sigma(x)|
            result = (
                np.concatenate([branch.value(values) for branch in system.branches]),
                np.concatenate([branch.abs_derivative(values) * derivs for branch in system.branches]),
            )

        self.cache.set(key, result)
        return result

    def build_atlas(
        self,
        system: CookieCutterSystem,
        level: int,
        with_derivatives: bool = False,
        grid_points: Optional[int] = None,
    ) -> CylinderAtlas:
        """
        All level-k cylinders with diameters, and optionally the
        sup-derivative brackets [lo, hi]
        """
        if level < 0:
            raise ValidationError(f"Level must be non-negative, got {level}")
        grid_points = grid_points or settings.GRID_POINTS
        if with_derivatives and grid_points < 2:
            raise ValidationError(f"Need at least 2 grid points, got {grid_points}")

        key = ('atlas', system, level, with_derivatives, grid_points if with_derivatives else 0)
        cached = self.cache.get(key)
        if cached is not None:
            return cached

        start_time = time.time()
        img0, img1, affine_diam = self._images(system, level)
        left = np.minimum(img0, img1)
        right = np.maximum(img0, img1)
        diam = affine_diam if affine_diam is not None else (right - left).astype(float)

        lo = hi = None
        if with_derivatives:
            if system.is_affine:
                lo = hi = diam
            else:
                _, derivs = self._grid_tables(system, level, grid_points)
                lo = derivs.max(axis=1).astype(float)
                hi = self._bracket_hi(system.xi, diam, lo, system.b ** -level)

        atlas = CylinderAtlas(
            level=level,
            n_branches=system.n_branches,
            left=left.astype(float),
            right=right.astype(float),
            diam=diam,
            supderiv_lo=lo,
            supderiv_hi=hi,
            grid_points=grid_points if with_derivatives else 0,
        )
        self.cache.set(key, atlas)

        elapsed = (time.time() - start_time) * 1000
        logger.debug(f"Atlas {system.name} level {level}: {len(atlas)} cylinders in {elapsed:.2f}ms")
        return atlas

    @staticmethod
    def _bracket_hi(xi: float, diam, lo, level_cap: float):
        """hi = min(xi |J|, xi lo, b^-k), never below lo"""
        return np.maximum(lo, np.minimum(np.minimum(xi * diam, xi * lo), level_cap))

    # ------------------------------------------------------------------
    # single-word operations
    # ------------------------------------------------------------------

    def cylinder_interval(self, system: CookieCutterSystem, word: Word) -> Tuple[float, float]:
        """J_sigma = phi_sigma([0, 1]); the empty word gives [0, 1]"""
        word.validate(system.n_branches)
        ends = np.array([0.0, 1.0], dtype=np.longdouble)
        for symbol in reversed(word.symbols):
            ends = system.branches[symbol - 1].value(ends)
        ends = ends.astype(float)
        return float(ends.min()), float(ends.max())

    def cylinder_diameter(self, system: CookieCutterSystem, word: Word) -> float:
        word.validate(system.n_branches)
        if system.is_affine:
            return math.prod(abs(system.branches[s - 1].ratio) for s in word.symbols)
        left, right = self.cylinder_interval(system, word)
        return right - left

    def sup_derivative(
        self, system: CookieCutterSystem, word: Word, grid_points: Optional[int] = None
    ) -> Tuple[float, float]:
        """
        lo = max over the grid of |phi'_sigma| (chain rule),
        hi = min(xi |J_sigma|, xi lo, b^-|sigma|), so lo <= ||phi'_sigma|| <= hi
        """
        grid_points = grid_points or settings.GRID_POINTS
        if grid_points < 2:
            raise ValidationError(f"Need at least 2 grid points, got {grid_points}")
        word.validate(system.n_branches)

        diam = self.cylinder_diameter(system, word)
        if system.is_affine:
            return diam, diam

        y = np.linspace(0.0, 1.0, grid_points, dtype=np.longdouble)
        deriv = np.ones(grid_points, dtype=np.longdouble)
        for symbol in reversed(word.symbols):
            branch = system.branches[symbol - 1]
            deriv = deriv * branch.abs_derivative(y)
            y = branch.value(y)
        lo = float(deriv.max())
        return lo, float(self._bracket_hi(system.xi, diam, lo, system.b ** -len(word)))

    def distortion_constant(self, system: CookieCutterSystem) -> float:
        """xi = exp(c / (b^gamma - 1)); exactly 1 for affine systems (c = 0)"""
        xi = distortion_from_defining_data(system.c, system.gamma, system.b)
        if xi == 1.0:
            logger.info(f"System {system.name} has zero distortion (c = 0); all xi-brackets collapse")
        return xi

    # ------------------------------------------------------------------
    # defining-data sweep
    # ------------------------------------------------------------------

    def run_checks(self, system: CookieCutterSystem, depth: int, grid_points: Optional[int] = None) -> VerificationReport:
        return self.verify_defining_data(system, depth, grid_points)

    def verify_defining_data(
        self, system: CookieCutterSystem, depth: int, grid_points: Optional[int] = None
    ) -> VerificationReport:
        """
        Check the derivative bounds, bounded distortion, diameter brackets,
        quasi-multiplicativity of diameters and derivatives, child-ratio bound,
        net properties, distance contraction and the open set condition
        for every word up to depth.
        """
        grid_points = grid_points or settings.GRID_POINTS
        if depth < 1:
            raise ValidationError(f"Depth must be at least 1, got {depth}")
        check_level_cap(system.n_branches, depth, self.cap)

        start_time = time.time()
        xi = self.distortion_constant(system)
        rtol = settings.CHECK_RTOL
        exact = system.is_affine
        atlases = [self.build_atlas(system, k, with_derivatives=True, grid_points=grid_points) for k in range(depth + 1)]

        report = VerificationReport(title=f"system[{system.name}]")
        report.add(self._check_derivative_bounds(system, grid_points, rtol, exact))
        report.add(self._check_bounded_distortion(system, depth, grid_points, xi, rtol, exact))
        report.add(self._check_level_diameters(system, atlases, rtol, exact))
        report.add(self._check_derivative_diameter_bracket(system, atlases, xi, rtol, exact))
        report.extend(self._check_quasi_multiplicativity(system, atlases, xi, rtol, exact))
        report.add(self._check_child_ratio(system, atlases, xi, rtol, exact))
        report.extend(self._check_net_properties(system, atlases, exact))
        report.add(self._check_distance_contraction(system, depth, grid_points, xi, rtol, exact))
        report.add(self._check_open_set_condition(system, exact))

        elapsed = time.time() - start_time
        summary = report.summary()
        logger.info(
            f"Defining data of {system.name} to depth {depth}: "
            f"{summary['passed']}/{summary['total']} checks passed in {elapsed:.2f}s"
        )
        return report

    def _check_derivative_bounds(self, system, grid_points, rtol, exact) -> CheckResult:
        """B^-1 <= |phi_j'(x)| <= b^-1"""
        grid = np.linspace(0.0, 1.0, grid_points, dtype=np.longdouble)
        worst_low, worst_high, witness = math.inf, -math.inf, ''
        for j, branch in enumerate(system.branches, start=1):
            derivs = branch.abs_derivative(grid).astype(float)
            if derivs.min() < worst_low:
                worst_low = float(derivs.min())
                witness = f"branch {j}, x={float(grid[int(derivs.argmin())]):.6g}"
            worst_high = max(worst_high, float(derivs.max()))
        lower, upper = 1.0 / system.B, 1.0 / system.b
        passed = worst_low >= lower * (1 - rtol) and worst_high <= upper * (1 + rtol)
        return CheckResult(
            name='derivative_bounds',
            passed=bool(passed),
            worst=worst_high,
            witness=witness,
            detail=f"min {worst_low:.6g} >= {lower:.6g}, max {worst_high:.6g} <= {upper:.6g}",
            exact=exact,
        )

    def _check_bounded_distortion(self, system, depth, grid_points, xi, rtol, exact) -> CheckResult:
        """|phi'_sigma(x)| <= xi |phi'_sigma(y)| for grid x, y"""
        worst, witness = 1.0, ''
        if not system.is_affine:
            for k in range(1, depth + 1):
                _, derivs = self._grid_tables(system, k, grid_points)
                ratios = (derivs.max(axis=1) / derivs.min(axis=1)).astype(float)
                position = int(ratios.argmax())
                if ratios[position] > worst:
                    worst = float(ratios[position])
                    witness = str(Word.from_index(position, k, system.n_branches))
        return CheckResult(
            name='bounded_distortion',
            passed=bool(worst <= xi * (1 + rtol)),
            worst=worst,
            witness=witness,
            detail=f"max sup/inf ratio {worst:.6g} <= xi = {xi:.6g}",
            exact=exact,
        )

    def _check_level_diameters(self, system, atlases, rtol, exact) -> CheckResult:
        """B^-k <= |J_sigma| <= b^-k"""
        worst, witness, passed = 0.0, '', True
        for atlas in atlases[1:]:
            k = atlas.level
            lower, upper = system.B ** -k, system.b ** -k
            low_ok = atlas.diam >= lower * (1 - rtol)
            high_ok = atlas.diam <= upper * (1 + rtol)
            if not (low_ok.all() and high_ok.all()):
                passed = False
                position = int(np.argmin(low_ok & high_ok))
                witness = str(atlas.word(position))
            worst = max(worst, float(np.max(atlas.diam / upper)))
        return CheckResult(
            name='level_diameter_bounds',
            passed=passed,
            worst=worst,
            witness=witness,
            detail='max |J_sigma| b^k',
            exact=exact,
        )

    def _check_derivative_diameter_bracket(self, system, atlases, xi, rtol, exact) -> CheckResult:
        """xi^-1 |J_sigma| <= ||phi'_sigma|| <= xi |J_sigma|, using the grid value"""
        worst, witness, passed = 1.0, '', True
        for atlas in atlases[1:]:
            ratio = atlas.supderiv_lo / atlas.diam
            ok = (ratio >= (1 - rtol) / xi) & (ratio <= xi * (1 + rtol))
            if not ok.all():
                passed = False
                witness = str(atlas.word(int(np.argmin(ok))))
            extreme = float(np.max(np.maximum(ratio, 1.0 / ratio)))
            if extreme > worst:
                worst = extreme
                if passed:
                    witness = str(atlas.word(int(np.argmax(np.maximum(ratio, 1.0 / ratio)))))
        return CheckResult(
            name='derivative_diameter_bracket',
            passed=passed,
            worst=worst,
            witness=witness,
            detail=f"max(ratio, 1/ratio) <= xi = {xi:.6g}",
            exact=exact,
        )

    def _check_quasi_multiplicativity(self, system, atlases, xi, rtol, exact) -> List[CheckResult]:
        """
        xi^-3 |J_s||J_t| <= |J_st| <= xi^3 |J_s||J_t|  and
        xi^-1 ||phi'_s|| ||phi'_t|| <= ||phi'_st|| <= ||phi'_s|| ||phi'_t||
        """
        n = system.n_branches
        depth = len(atlases) - 1
        worst_diam, witness_diam, diam_ok = 0.0, '', True
        worst_deriv, witness_deriv, deriv_ok = 0.0, '', True
        bound = 3 * math.log(xi)

        for len_a in range(1, depth):
            for len_b in range(1, depth - len_a + 1):
                a, b, ab = atlases[len_a], atlases[len_b], atlases[len_a + len_b]
                shape = (len(a), len(b))

                log_ratio = np.log(ab.diam.reshape(shape)) - np.add.outer(a.log_diam, b.log_diam)
                position = int(np.abs(log_ratio).argmax())
                extreme = float(np.abs(log_ratio).flat[position])
                if extreme > worst_diam:
                    worst_diam = extreme
                    witness_diam = _pair_witness(position, shape, len_a, len_b, n)
                if extreme > bound + rtol:
                    diam_ok = False

                upper_gap = ab.supderiv_lo.reshape(shape) - np.outer(a.supderiv_hi, b.supderiv_hi) * (1 + rtol)
                lower_gap = np.outer(a.supderiv_lo, b.supderiv_lo) * (1 - rtol) / xi - ab.supderiv_hi.reshape(shape)
                gap = np.maximum(upper_gap, lower_gap)
                position = int(gap.argmax())
                if gap.flat[position] > 0:
                    deriv_ok = False
                    witness_deriv = _pair_witness(position, shape, len_a, len_b, n)
                worst_deriv = max(worst_deriv, float(gap.flat[position]))

        return [
            CheckResult(
                name='diameter_quasi_multiplicativity',
                passed=diam_ok,
                worst=math.exp(worst_diam),
                witness=witness_diam,
                detail=f"max |J_st| / (|J_s||J_t|) deviation <= xi^3 = {math.exp(bound):.6g}",
                exact=exact,
            ),
            CheckResult(
                name='derivative_quasi_multiplicativity',
                passed=deriv_ok,
                worst=worst_deriv,
                witness=witness_deriv,
                detail='largest bracket violation (<= 0 passes)',
                exact=exact,
            ),
        ]

    def _check_child_ratio(self, system, atlases, xi, rtol, exact) -> CheckResult:
        """|J_{sigma j}| >= xi^-2 B^-1 |J_sigma|"""
        n = system.n_branches
        bound = 1.0 / (xi ** 2 * system.B)
        worst, witness = math.inf, ''
        for parent, child in zip(atlases[:-1], atlases[1:]):
            ratio = child.diam.reshape(len(parent), n) / parent.diam[:, np.newaxis]
            position = int(ratio.argmin())
            if ratio.flat[position] < worst:
                worst = float(ratio.flat[position])
                witness = str(child.word(position))
        return CheckResult(
            name='child_diameter_ratio',
            passed=bool(worst >= bound * (1 - rtol)),
            worst=worst,
            witness=witness,
            detail=f"min |J_sj| / |J_s| >= {bound:.6g}",
            exact=exact,
        )

    def _check_net_properties(self, system, atlases, exact) -> List[CheckResult]:
        """nesting J_{sigma j} in J_sigma; same-level cylinders pairwise disjoint"""
        n = system.n_branches
        tolerance = 1e-15
        nested, nest_witness = True, ''
        disjoint, disjoint_witness = True, ''
        min_gap = math.inf

        for parent, child in zip(atlases[:-1], atlases[1:]):
            left = child.left.reshape(len(parent), n)
            right = child.right.reshape(len(parent), n)
            inside = (left >= parent.left[:, np.newaxis] - tolerance) & (right <= parent.right[:, np.newaxis] + tolerance)
            if not inside.all():
                nested = False
                nest_witness = str(child.word(int(np.argmin(inside))))

        for atlas in atlases[1:]:
            order = np.argsort(atlas.left, kind='stable')
            gaps = atlas.left[order][1:] - atlas.right[order][:-1]
            if len(gaps):
                position = int(gaps.argmin())
                min_gap = min(min_gap, float(gaps[position]))
                if gaps[position] <= 0:
                    disjoint = False
                    disjoint_witness = f"{atlas.word(int(order[position]))} / {atlas.word(int(order[position + 1]))}"

        return [
            CheckResult(name='cylinder_nesting', passed=nested, witness=nest_witness, exact=exact),
            CheckResult(
                name='cylinder_disjointness',
                passed=disjoint,
                worst=min_gap,
                witness=disjoint_witness,
                detail='smallest gap between same-level cylinders',
                exact=exact,
            ),
        ]

    def _check_distance_contraction(self, system, depth, grid_points, xi, rtol, exact) -> CheckResult:
        """xi^-1 ||phi'_s|| d(x, y) <= d(phi_s x, phi_s y) <= ||phi'_s|| d(x, y)"""
        stride = max(1, grid_points // 8)
        columns = np.arange(0, grid_points, stride)
        grid = np.linspace(0.0, 1.0, grid_points)[columns]
        first, second = np.triu_indices(len(columns), k=1)
        distance = np.abs(grid[first] - grid[second])

        worst, witness, passed = 0.0, '', True
        for k in range(1, depth + 1):
            atlas = self.build_atlas(system, k, with_derivatives=True, grid_points=grid_points)
            values, _ = self._grid_tables(system, k, grid_points)
            sampled = values[:, columns]
            image_distance = np.abs(sampled[:, first] - sampled[:, second]).astype(float)
            upper = atlas.supderiv_hi[:, np.newaxis] * distance * (1 + rtol)
            lower = atlas.supderiv_lo[:, np.newaxis] * distance * (1 - rtol) / xi
            ok = (image_distance <= upper) & (image_distance >= lower)
            if not ok.all():
                passed = False
                witness = str(atlas.word(int(np.argmin(ok.all(axis=1)))))
            ratio = image_distance / (atlas.supderiv_hi[:, np.newaxis] * distance)
            worst = max(worst, float(ratio.max()))
        return CheckResult(
            name='distance_contraction',
            passed=passed,
            worst=worst,
            witness=witness,
            detail='max d(phi x, phi y) / (hi d(x, y))',
            exact=exact,
        )

    def _check_open_set_condition(self, system, exact) -> CheckResult:
        """phi_j((0,1)) are pairwise disjoint subsets of (0,1)"""
        images = sorted(branch.image() for branch in system.branches)
        inside = images[0][0] >= 0.0 and images[-1][1] <= 1.0
        separated = all(right_a <= left_b for (_, right_a), (left_b, _) in zip(images, images[1:]))
        gaps = [left_b - right_a for (_, right_a), (left_b, _) in zip(images, images[1:])]
        return CheckResult(
            name='open_set_condition',
            passed=bool(inside and separated),
            worst=min(gaps) if gaps else None,
            detail='U = (0, 1)',
            exact=exact,
        )
