"""
Pressure Services - finite-level brackets for Q(t) and P(q, t) and the
certified roots h, beta(q) and kappa_r derived from them
"""
import logging
import math
import time
from dataclasses import replace
from typing import Any, Callable, Dict, Iterable, Mapping, Optional, Sequence, Tuple

import numpy as np
import pandas as pd
from scipy.optimize import brentq
from scipy.special import logsumexp

from core.exceptions import (
    BrokenSystemError,
    InsufficientDataError,
    NumericalOverflowError,
    ValidationError,
)
from core.reports import CheckResult, VerificationReport
from quantdim import settings
from system.models import CookieCutterSystem, CylinderAtlas
from system.services import GeometryService

from .convergence import aitken_delta_squared, level_rates
from .interfaces import IPressureService
from .models import (
    IntersectionRow,
    KappaResult,
    PressureBracket,
    PressureCurve,
    PressurePoint,
    RootEnclosure,
    kappa_from_q,
)
from .root_finding import certified_root

logger = logging.getLogger(__name__)

CONVEXITY_WEIGHTS = (0.25, 0.5, 0.75)


def self_similar_kappa(ratios: Sequence[float], probabilities: Sequence[float], r: float) -> float:
    """
    Solve sum_j (p_j s_j^r)^(kappa / (r + kappa)) = 1 for kappa

    Solved in the exponent s = kappa / (r + kappa), which lies in (0, 1):
    the left side is N at s = 0 and sum p_j s_j^r < 1 at s = 1.
    """
    if r <= 0:
        raise ValidationError(f"Quantization order must be positive, got {r}")
    ratios = np.asarray(ratios, dtype=float)
    probabilities = np.asarray(probabilities, dtype=float)
    if ratios.shape != probabilities.shape or len(ratios) < 2:
        raise ValidationError('Need matching ratios and probabilities for at least two maps')
    if np.any(probabilities <= 0) or abs(probabilities.sum() - 1.0) > 1e-12:
        raise ValidationError('Probabilities must be positive and sum to 1')

    log_terms = np.log(probabilities) + r * np.log(ratios)

    def equation(s: float) -> float:
        return float(np.sum(np.exp(s * log_terms))) - 1.0

    exponent = brentq(equation, 0.0, 1.0, xtol=1e-15, maxiter=settings.BISECTION_MAX_ITER)
    return kappa_from_q(r, exponent)


class PressureService(IPressureService):
    """
    Pressure brackets from level-k sums

    Slack constants come from the quasi-multiplicativity of diameters (xi)
    and of the measure (L); sup-derivative bracket ends are routed to the
    conservative side of every sum.
    """

    def __init__(self, geometry: Optional[GeometryService] = None, grid_points: Optional[int] = None):
        self.geometry = geometry or GeometryService()
        self.grid_points = grid_points or settings.GRID_POINTS

    def _defaults(self, system: CookieCutterSystem, k_max: Optional[int], tol: Optional[float]) -> Tuple[int, float]:
        k_max = settings.DEFAULT_DEPTH if k_max is None else k_max
        if tol is None:
            tol = settings.TOL_AFFINE if system.is_affine else settings.TOL_ANALYTIC
        if k_max < 2:
            raise ValidationError(f"k_max must be at least 2, got {k_max}")
        if tol <= 0:
            raise ValidationError(f"Tolerance must be positive, got {tol}")
        return k_max, tol

    # ------------------------------------------------------------------
    # Q(t)
    # ------------------------------------------------------------------

    def partition_sum(self, atlas: CylinderAtlas, t: float) -> float:
        """
        S_k(t) in lexicographic order; numpy sums contiguous arrays pairwise
        """
        if atlas.level < 1:
            raise ValidationError(f"Partition sums need level >= 1, got {atlas.level}")
        with np.errstate(over='ignore'):
            total = float(np.sum(np.power(atlas.diam, t)))
        if not math.isfinite(total):
            raise NumericalOverflowError(
                f"S_{atlas.level}({t}) overflows; lower t or the level",
                {'level': atlas.level, 't': t},
            )
        return total

    def log_partition_sum(self, atlas: CylinderAtlas, t: float) -> float:
        return float(logsumexp(t * atlas.log_diam))

    @staticmethod
    def _apriori_Q(system: CookieCutterSystem, t: float) -> Tuple[float, float]:
        """log N - t log B <= Q(t) <= log N - t log b, mirrored for t < 0"""
        log_n = math.log(system.n_branches)
        if t >= 0:
            return log_n - t * math.log(system.B), log_n - t * math.log(system.b)
        return log_n - t * math.log(system.b), log_n - t * math.log(system.B)

    def _q_bracket(self, system: CookieCutterSystem, t: float, k: int) -> PressureBracket:
        atlas = self.geometry.build_atlas(system, k)
        mid = self.log_partition_sum(atlas, t) / k
        slack = 3.0 * abs(t) * math.log(system.xi) / k
        lo, hi = mid - slack, mid + slack

        if not system.is_affine:
            prior_lo, prior_hi = self._apriori_Q(system, t)
            lo, hi = max(lo, prior_lo), min(hi, prior_hi)
            mid = min(max(mid, lo), hi)

        return PressureBracket(level=k, lo=lo, mid=mid, hi=hi, slack=slack)

    def pressure_Q(self, system: CookieCutterSystem, t: float, k_max: Optional[int] = None) -> PressureBracket:
        """
        Q(t) from level k_max: midpoint (1/k) log S_k(t), widened by
        3|t| log xi / k; zero width for affine systems
        """
        k_max, _ = self._defaults(system, k_max, None)
        bracket = self._q_bracket(system, t, k_max)

        levels = list(range(max(1, k_max - 2), k_max + 1))
        log_sums = [self.log_partition_sum(self.geometry.build_atlas(system, k), t) for k in levels]
        extrapolated = aitken_delta_squared(level_rates(log_sums, levels))
        logger.debug(
            f"Q({t:.6g}) for {system.name} at k={k_max}: "
            f"[{bracket.lo:.12g}, {bracket.hi:.12g}], Aitken {extrapolated}"
        )
        return replace(bracket, extrapolated=extrapolated)

    def hausdorff_dimension(
        self, system: CookieCutterSystem, k_max: Optional[int] = None, tol: Optional[float] = None
    ) -> RootEnclosure:
        """
        Bisection on sign-certified Q brackets; the partition-sum bounds at
        the enclosure ends are attached as a report
        """
        k_max, tol = self._defaults(system, k_max, tol)
        start_time = time.time()

        at_zero = self._q_bracket(system, 0.0, k_max)
        if at_zero.lo <= 0:
            raise BrokenSystemError(
                f"Q(0) is not certified positive for {system.name}",
                {'lo': at_zero.lo, 'hi': at_zero.hi},
            )

        enclosure = certified_root(
            lambda t: self._bracket_ends(self._q_bracket(system, t, k_max)),
            0.0,
            1.0,
            tol,
            mid_fn=lambda t: self._q_bracket(system, t, k_max).mid,
        )
        report = self._partition_bound_checks(system, enclosure, k_max)
        enclosure = replace(enclosure, report=report)

        elapsed = time.time() - start_time
        logger.info(
            f"h({system.name}) in [{enclosure.lo:.12g}, {enclosure.hi:.12g}] "
            f"(estimate {enclosure.estimate:.12g}, k={k_max}) in {elapsed:.3f}s"
        )
        if enclosure.ambiguous:
            logger.warning(f"h({system.name}) enclosure is limited by the pressure brackets, width {enclosure.width:.3g}")
        return enclosure

    @staticmethod
    def _bracket_ends(bracket: PressureBracket) -> Tuple[float, float]:
        return bracket.lo, bracket.hi

    def _partition_bound_checks(self, system: CookieCutterSystem, enclosure: RootEnclosure, k_max: int) -> VerificationReport:
        """
        xi^(-3h) <= S_n(h) <= xi^(3h) and the strict bounds at s_* < h < s^*,
        evaluated at the enclosure ends (S_n decreases in t)
        """
        log_xi = math.log(system.xi)
        h_lo, h_hi = enclosure.lo, enclosure.hi
        rtol = settings.CHECK_RTOL

        report = VerificationReport(title=f"hausdorff_dimension[{system.name}]")
        bounds_ok, strict_ok = True, True
        worst, witness = 0.0, ''
        for n in range(1, k_max + 1):
            atlas = self.geometry.build_atlas(system, n)
            log_s_at_lo = self.log_partition_sum(atlas, h_lo)
            log_s_at_hi = self.log_partition_sum(atlas, h_hi)

            if log_s_at_lo < -3 * h_hi * log_xi - rtol or log_s_at_hi > 3 * h_hi * log_xi + rtol:
                bounds_ok = False
                witness = f"n={n}"
            if log_s_at_lo < -3 * h_lo * log_xi - rtol or log_s_at_hi > 3 * h_hi * log_xi + rtol:
                strict_ok = False
                witness = witness or f"n={n}"
            worst = max(worst, abs(log_s_at_lo), abs(log_s_at_hi))

        report.add(CheckResult(
            name='partition_sum_bounds',
            passed=bounds_ok,
            worst=worst,
            witness=witness,
            detail=f"max |log S_n| at the enclosure ends, bound 3 h log xi = {3 * h_hi * log_xi:.6g}",
            exact=system.is_affine,
        ))
        report.add(CheckResult(
            name='strict_partition_bounds',
            passed=strict_ok,
            worst=worst,
            witness=witness,
            detail='S_n(s_*) > xi^(-3 s_*) and S_n(s^*) < xi^(3 s^*) with s_* = h_lo, s^* = h_hi',
            exact=system.is_affine,
        ))
        return report

    # ------------------------------------------------------------------
    # P(q, t)
    # ------------------------------------------------------------------

    def _weights_array(self, atlas: CylinderAtlas, weights: Any) -> np.ndarray:
        if hasattr(weights, 'mid') and hasattr(weights, 'level'):
            values = np.asarray(weights.mid, dtype=float)
        elif isinstance(weights, Mapping):
            values = np.empty(len(atlas))
            for position, word in enumerate(atlas.words()):
                if word not in weights:
                    raise ValidationError(f"Missing weight for word {word}", {'word': str(word)})
                values[position] = weights[word]
        else:
            values = np.asarray(weights, dtype=float)

        if values.shape != (len(atlas),):
            raise ValidationError(f"Expected {len(atlas)} level-{atlas.level} weights, got {values.shape}")
        if np.any(values <= 0):
            position = int(np.argmin(values))
            raise ValidationError(
                f"Non-positive weight {values[position]} for word {atlas.word(position)}",
                {'word': str(atlas.word(position))},
            )
        return values

    def mixed_sum(self, atlas: CylinderAtlas, weights: Any, q: float, t: float) -> float:
        """Z_k(q, t) = sum w_sigma^q ||phi'_sigma||^t using bracket midpoints"""
        if not atlas.has_derivatives:
            raise ValidationError('Mixed sums need an atlas built with derivative brackets')
        values = self._weights_array(atlas, weights)
        with np.errstate(over='ignore'):
            total = float(np.sum(np.power(values, q) * np.power(atlas.supderiv_mid, t)))
        if not math.isfinite(total):
            raise NumericalOverflowError(f"Z_{atlas.level}({q}, {t}) overflows", {'q': q, 't': t})
        return total

    def _p_bracket(self, system: CookieCutterSystem, measure: Any, q: float, t: float, k: int) -> PressureBracket:
        if k > measure.depth:
            raise ValidationError(f"Measure holds weights to level {measure.depth}, P needs level {k}")
        atlas = self.geometry.build_atlas(system, k, with_derivatives=True, grid_points=self.grid_points)
        log_w = q * np.log(self._weights_array(atlas, measure.level_weights(k)))
        mid = float(logsumexp(log_w + t * atlas.log_supderiv_mid)) / k

        if system.is_affine:
            return PressureBracket(level=k, lo=mid, mid=mid, hi=mid)

        log_xi = math.log(system.xi)
        log_lo, log_hi = np.log(atlas.supderiv_lo), np.log(atlas.supderiv_hi)
        upper_deriv, lower_deriv = (log_hi, log_lo) if t >= 0 else (log_lo, log_hi)
        upper = float(logsumexp(log_w + t * upper_deriv)) / k
        lower = float(logsumexp(log_w + t * lower_deriv)) / k

        measure_slack = abs(q) * math.log(measure.L) / k
        slack = measure_slack + abs(t) * log_xi / k
        if t < 0:
            slack += abs(t) * log_xi / k
        lo, hi = lower - slack, upper + slack

        # ||phi'_sigma|| lies in [B^-k, b^-k], which bounds P(q, t) against P(q, 0)
        # the weights of one level sum to 1, so P(1, 0) = 0 exactly
        if q == 1:
            base_lo = base_hi = 0.0
        else:
            base = float(logsumexp(log_w)) / k
            base_lo, base_hi = base - measure_slack, base + measure_slack
        if t >= 0:
            prior_lo, prior_hi = base_lo - t * math.log(system.B), base_hi - t * math.log(system.b)
        else:
            prior_lo, prior_hi = base_lo - t * math.log(system.b), base_hi - t * math.log(system.B)
        lo, hi = max(lo, prior_lo), min(hi, prior_hi)
        return PressureBracket(level=k, lo=lo, mid=min(max(mid, lo), hi), hi=hi, slack=slack)

    def pressure_P(
        self, system: CookieCutterSystem, measure: Any, q: float, t: float, k_max: Optional[int] = None
    ) -> PressureBracket:
        """
        P(q, t) from level k_max: midpoint (1/k) log Z_k(q, t) with slack
        (|q| log L + |t| log xi + [t < 0] |t| log xi) / k
        """
        k_max, _ = self._defaults(system, k_max, None)
        bracket = self._p_bracket(system, measure, q, t, k_max)

        levels = list(range(max(1, k_max - 2), k_max + 1))
        log_sums = []
        for k in levels:
            atlas = self.geometry.build_atlas(system, k, with_derivatives=True, grid_points=self.grid_points)
            log_w = np.log(self._weights_array(atlas, measure.level_weights(k)))
            log_sums.append(float(logsumexp(q * log_w + t * atlas.log_supderiv_mid)))
        extrapolated = aitken_delta_squared(level_rates(log_sums, levels))
        return replace(bracket, extrapolated=extrapolated)

    def beta(
        self, system: CookieCutterSystem, measure: Any, q: float,
        k_max: Optional[int] = None, tol: Optional[float] = None,
    ) -> RootEnclosure:
        """Zero of t -> P(q, t), which is strictly decreasing in t"""
        k_max, tol = self._defaults(system, k_max, tol)
        return certified_root(
            lambda t: self._bracket_ends(self._p_bracket(system, measure, q, t, k_max)),
            -1.0,
            1.0,
            tol,
            mid_fn=lambda t: self._p_bracket(system, measure, q, t, k_max).mid,
        )

    # ------------------------------------------------------------------
    # kappa_r
    # ------------------------------------------------------------------

    def kappa(
        self, system: CookieCutterSystem, measure: Any, r: float,
        k_max: Optional[int] = None, tol: Optional[float] = None,
    ) -> KappaResult:
        """
        q_r from beta(q) = r q on [0, 1], kappa_r = r q_r / (1 - q_r),
        cross-checked against beta(q_r) / (1 - q_r) and the zero of q -> P(q, r q)
        """
        if r <= 0:
            raise ValidationError(f"Quantization order must be positive, got {r}")
        k_max, tol = self._defaults(system, k_max, tol)
        start_time = time.time()

        betas: Dict[float, RootEnclosure] = {}

        def beta_at(q: float) -> RootEnclosure:
            if q not in betas:
                betas[q] = self.beta(system, measure, q, k_max, tol)
            return betas[q]

        line = certified_root(
            lambda q: (beta_at(q).lo - r * q, beta_at(q).hi - r * q),
            0.0,
            1.0,
            tol,
            mid_fn=lambda q: beta_at(q).estimate - r * q,
            fixed_range=True,
        )
        beta_estimate = beta_at(line.estimate).estimate
        kappa_from_beta = beta_estimate / (1.0 - line.estimate)

        direct = certified_root(
            lambda q: self._bracket_ends(self._p_bracket(system, measure, q, r * q, k_max)),
            0.0,
            1.0,
            tol,
            mid_fn=lambda q: self._p_bracket(system, measure, q, r * q, k_max).mid,
            fixed_range=True,
        )

        result = KappaResult(
            r=r,
            q=line,
            kappa_lo=kappa_from_q(r, line.lo),
            kappa_mid=kappa_from_q(r, line.estimate),
            kappa_hi=kappa_from_q(r, line.hi),
            beta_at_q=beta_estimate,
            kappa_from_beta=kappa_from_beta,
            direct=direct,
            direct_kappa_lo=kappa_from_q(r, direct.lo),
            direct_kappa_hi=kappa_from_q(r, direct.hi),
        )
        report = self._kappa_checks(system, measure, result, beta_at(line.estimate), k_max, tol)
        result = replace(result, report=report)

        elapsed = time.time() - start_time
        logger.info(
            f"kappa_{r:g}({system.name}) in [{result.kappa_lo:.12g}, {result.kappa_hi:.12g}] "
            f"(q_r estimate {line.estimate:.12g}) in {elapsed:.3f}s"
        )
        if not report.passed:
            logger.warning(f"kappa_{r:g}({system.name}) consistency checks failed: {[c.name for c in report.failures]}")
        return result

    def _kappa_checks(
        self, system: CookieCutterSystem, measure: Any, result: KappaResult,
        beta_enclosure: RootEnclosure, k_max: int, tol: float,
    ) -> VerificationReport:
        report = VerificationReport(title=f"kappa[{system.name}, r={result.r:g}]")
        q_mid = result.q.estimate
        floor = 10.0 * tol * max(1.0, result.kappa_mid)

        allowance = result.width + beta_enclosure.width / (1.0 - q_mid) + floor
        gap = abs(result.kappa_mid - result.kappa_from_beta)
        report.add(CheckResult(
            name='intercept_matches_intersection',
            passed=bool(gap <= allowance),
            worst=gap,
            detail=f"|r q/(1-q) - beta(q)/(1-q)| <= {allowance:.3g}",
            exact=system.is_affine,
        ))

        overlaps = result.direct_kappa_lo <= result.kappa_hi + floor and result.kappa_lo <= result.direct_kappa_hi + floor
        report.add(CheckResult(
            name='direct_zero_matches_intersection',
            passed=bool(overlaps),
            worst=abs(kappa_from_q(result.r, result.direct.estimate) - result.kappa_mid),
            detail=f"direct [{result.direct_kappa_lo:.12g}, {result.direct_kappa_hi:.12g}]",
            exact=system.is_affine,
        ))

        report.add(self._level_sum_check(system, measure, result, k_max))
        return report

    def _level_sum_check(self, system: CookieCutterSystem, measure: Any, result: KappaResult, k_max: int) -> CheckResult:
        """
        (L xi^r)^(-q) <= sum_{Omega_n} (w ||phi'||^r)^q <= (L xi^r)^q for every n <= k_max;
        the sum decreases in q, so it is evaluated at the enclosure ends
        """
        r = result.r
        q_lo, q_hi = result.q.lo, result.q.hi
        log_constant = math.log(measure.L) + r * math.log(system.xi)
        rtol = settings.CHECK_RTOL
        passed, worst, witness = True, 0.0, ''

        for n in range(1, k_max + 1):
            atlas = self.geometry.build_atlas(system, n, with_derivatives=True, grid_points=self.grid_points)
            log_w = np.log(self._weights_array(atlas, measure.level_weights(n)))
            largest = float(logsumexp(q_lo * (log_w + r * np.log(atlas.supderiv_hi))))
            smallest = float(logsumexp(q_hi * (log_w + r * np.log(atlas.supderiv_lo))))
            if largest < -q_hi * log_constant - rtol or smallest > q_hi * log_constant + rtol:
                passed = False
                witness = witness or f"n={n}"
            worst = max(worst, abs(largest), abs(smallest))

        return CheckResult(
            name='level_sum_bounds',
            passed=passed,
            worst=worst,
            witness=witness,
            detail=f"max |log level sum|, bound q log(L xi^r) = {q_hi * log_constant:.6g}",
            exact=system.is_affine,
        )

    # ------------------------------------------------------------------
    # curves
    # ------------------------------------------------------------------

    def temperature_curve(
        self, system: CookieCutterSystem, measure: Any, q_grid: Sequence[float],
        k_max: Optional[int] = None, tol: Optional[float] = None, r_values: Sequence[float] = (),
        mapper: Optional[Callable[[Callable, Iterable], Iterable]] = None,
    ) -> PressureCurve:
        """
        beta over a sorted q grid plus one intersection row per r;
        mapper lets the caller fan the grid out to a worker pool
        """
        q_grid = [float(q) for q in q_grid]
        if not q_grid:
            raise ValidationError('q grid is empty')
        if any(b <= a for a, b in zip(q_grid, q_grid[1:])):
            raise ValidationError('q grid must be strictly increasing')
        k_max, tol = self._defaults(system, k_max, tol)
        mapper = mapper or map

        enclosures = list(mapper(lambda q: self.beta(system, measure, q, k_max, tol), q_grid))
        points = [PressurePoint(q=q, beta_lo=e.lo, beta_mid=e.estimate, beta_hi=e.hi) for q, e in zip(q_grid, enclosures)]

        results = list(mapper(lambda r: self.kappa(system, measure, r, k_max, tol), list(r_values)))
        figure1 = [
            IntersectionRow(
                r=result.r,
                q_r=result.q.estimate,
                beta_at_qr=result.beta_at_q,
                kappa_r_lo=result.kappa_lo,
                kappa_r_hi=result.kappa_hi,
            )
            for result in results
        ]
        logger.info(f"Temperature curve for {system.name}: {len(points)} samples, {len(figure1)} intersection rows")
        return PressureCurve(points=points, figure1=figure1, level=k_max)

    def legendre_spectrum(self, curve: PressureCurve) -> pd.DataFrame:
        """
        alpha = -d beta/dq by central differences on the midpoints,
        f = q alpha + beta.

        flagged marks samples whose bracket is wider than the local q step, and
        always the two end samples: there np.gradient falls back to one-sided
        differences, which are only first-order accurate.
        """
        if len(curve) < 3:
            raise InsufficientDataError(f"Legendre sampling needs at least 3 curve samples, got {len(curve)}")
        q = curve.q
        steps = np.diff(q)
        if np.any(steps <= 0):
            raise ValidationError('Curve samples must have strictly increasing q')

        beta_mid = curve.beta_mid
        alpha = -np.gradient(beta_mid, q)
        f_alpha = q * alpha + beta_mid
        local_step = np.minimum(np.r_[np.inf, steps], np.r_[steps, np.inf])
        wide = (curve.beta_hi - curve.beta_lo) > local_step
        if wide.any():
            logger.warning(f"{int(wide.sum())} Legendre samples have brackets wider than the q step")
        flagged = wide.copy()
        flagged[[0, -1]] = True
        return pd.DataFrame({'q': q, 'alpha': alpha, 'f_alpha': f_alpha, 'flagged': flagged})

    def check_curve_shape(
        self, system: CookieCutterSystem, measure: Any, curve: PressureCurve,
        k_max: Optional[int] = None, tol: Optional[float] = None,
    ) -> VerificationReport:
        """Strict decrease, convexity at a in {1/4, 1/2, 3/4} and sign at the grid extremes"""
        k_max, tol = self._defaults(system, k_max, tol)
        report = VerificationReport(title=f"temperature_curve[{system.name}]")
        q, beta_mid, widths = curve.q, curve.beta_mid, curve.beta_hi - curve.beta_lo

        steps = np.diff(beta_mid)
        position = int(np.argmax(steps)) if len(steps) else 0
        report.add(CheckResult(
            name='beta_strictly_decreasing',
            passed=bool(np.all(steps < 0)),
            worst=float(steps.max()) if len(steps) else None,
            witness=f"q={q[position]:g}" if len(steps) else '',
            exact=system.is_affine,
        ))

        pairs = [(i, i + 2) for i in range(len(q) - 2)]
        if len(q) >= 2:
            pairs.append((0, len(q) - 1))
        worst, witness, convex = -math.inf, '', True
        for i, j in pairs:
            for a in CONVEXITY_WEIGHTS:
                inner = self.beta(system, measure, a * q[i] + (1 - a) * q[j], k_max, tol)
                chord = a * beta_mid[i] + (1 - a) * beta_mid[j]
                slack = inner.width + a * widths[i] + (1 - a) * widths[j] + 10 * tol
                excess = inner.estimate - chord - slack
                if excess > worst:
                    worst, witness = excess, f"q1={q[i]:g}, q2={q[j]:g}, a={a}"
                convex = convex and excess <= 0
        report.add(CheckResult(
            name='beta_convexity',
            passed=convex,
            worst=worst if pairs else None,
            witness=witness,
            detail='largest excess of beta over the chord (<= 0 passes)',
            exact=system.is_affine,
        ))

        limits_ok = (q[0] >= 1 or beta_mid[0] > 0) and (q[-1] <= 1 or beta_mid[-1] < 0)
        report.add(CheckResult(
            name='beta_limit_range',
            passed=bool(limits_ok),
            detail=f"beta({q[0]:g}) = {beta_mid[0]:.6g}, beta({q[-1]:g}) = {beta_mid[-1]:.6g}",
            exact=system.is_affine,
        ))
        return report
