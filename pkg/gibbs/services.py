"""
Gibbs Services - Cesaro surrogate for mu_h, its rigorous brackets and
discretization into a 1-D atomic measure
"""
import logging
import math
import time
from typing import List, Optional, Sequence, Tuple

import numpy as np
import pandas as pd
from scipy.special import logsumexp

from core.exceptions import ValidationError
from core.interfaces.service import ICheckService
from core.reports import CheckResult, VerificationReport
from pressure.models import RootEnclosure
from pressure.services import PressureService
from quantdim import settings
from system.models import CookieCutterSystem
from system.services import GeometryService
from words.models import Antichain, Word
from words.services import check_level_cap

from .interfaces import IGibbsService
from .models import CylinderWeight, DiscreteMeasure1D, GibbsSurrogate, LevelWeights
from .repositories import WeightRepository

logger = logging.getLogger(__name__)

ATOM_RULES = ('midpoint', 'left')


def _renormalize_children(raw: np.ndarray, parent_mid: np.ndarray, n_branches: int) -> np.ndarray:
    """Scale each sibling block so it sums to its parent's weight"""
    blocks = raw.reshape(len(parent_mid), n_branches)
    return (blocks / blocks.sum(axis=1, keepdims=True) * parent_mid[:, np.newaxis]).ravel()


class GibbsService(IGibbsService, ICheckService):
    """
    Builds GibbsSurrogate objects

    The Banach limit behind mu_h is replaced by the Cesaro mean of nu_n over
    a window [n0, n1]; sibling blocks are renormalized top-down so the mids
    are exactly additive, and the eta-bracket is re-verified afterwards.
    """

    def __init__(
        self,
        geometry: Optional[GeometryService] = None,
        pressure: Optional[PressureService] = None,
        window: Optional[Tuple[int, int]] = None,
        cap: Optional[int] = None,
    ):
        self.geometry = geometry or GeometryService()
        self.pressure = pressure or PressureService(geometry=self.geometry)
        self.window = tuple(window or settings.CESARO_WINDOW)
        self.cap = settings.ENUMERATION_CAP if cap is None else cap

    # ------------------------------------------------------------------
    # nu_n
    # ------------------------------------------------------------------

    def _log_nu_level(self, system: CookieCutterSystem, level: int, n: int, h: float) -> np.ndarray:
        """log nu_n(C(sigma)) for every sigma in Omega_level"""
        check_level_cap(system.n_branches, level + n, self.cap)
        atlas = self.geometry.build_atlas(system, level + n)
        log_terms = h * atlas.log_diam
        blocks = log_terms.reshape(system.n_branches ** level, system.n_branches ** n)
        return logsumexp(blocks, axis=1) - logsumexp(log_terms)

    def nu_n(self, system: CookieCutterSystem, word: Word, n: int, h: float) -> float:
        """
        nu_n(C(sigma)) = sum_{tau in Omega_n} |J_{sigma tau}|^h / sum_{tau in Omega_{|sigma|+n}} |J_tau|^h
        """
        if n < 0:
            raise ValidationError(f"n must be non-negative, got {n}")
        word.validate(system.n_branches)
        check_level_cap(system.n_branches, len(word) + n, self.cap)

        atlas = self.geometry.build_atlas(system, len(word) + n)
        log_terms = h * atlas.log_diam
        block = system.n_branches ** n
        start = word.index(system.n_branches) * block
        return float(math.exp(logsumexp(log_terms[start:start + block]) - logsumexp(log_terms)))

    # ------------------------------------------------------------------
    # surrogate construction
    # ------------------------------------------------------------------

    @staticmethod
    def gibbs_constants(system: CookieCutterSystem, h: RootEnclosure) -> Tuple[float, float]:
        """eta = xi^(9h), L = eta^3 xi^(3h), at the upper end of the h enclosure"""
        log_xi = math.log(system.xi)
        log_eta = 9.0 * h.hi * log_xi
        return math.exp(log_eta), math.exp(3.0 * log_eta + 3.0 * h.hi * log_xi)

    def _validate_window(self, window: Tuple[int, int]) -> Tuple[int, int]:
        n0, n1 = (int(v) for v in window)
        if n0 < 0 or n1 < n0:
            raise ValidationError(f"Averaging window must satisfy 0 <= n0 <= n1, got {window}")
        return n0, n1

    def _affine_levels(self, system: CookieCutterSystem, h: float, depth: int) -> List[LevelWeights]:
        """Closed form: w(sigma) = prod p_j with p_j = s_j^h normalized"""
        probabilities = np.array([abs(s) ** h for s in system.ratios])
        probabilities /= probabilities.sum()

        mid = np.ones(1)
        levels = [LevelWeights(level=0, lo=mid, mid=mid, hi=mid, spread=np.zeros(1))]
        for k in range(1, depth + 1):
            mid = np.concatenate([p * mid for p in probabilities])
            levels.append(LevelWeights(level=k, lo=mid, mid=mid, hi=mid, spread=np.zeros(len(mid))))
        return levels

    def _analytic_levels(
        self, system: CookieCutterSystem, h: RootEnclosure, window: Tuple[int, int], depth: int, eta: float
    ) -> List[LevelWeights]:
        n0, n1 = window
        h_value = h.point
        mid = np.ones(1)
        levels = [LevelWeights(level=0, lo=mid, mid=mid, hi=mid, spread=np.zeros(1))]

        for k in range(1, depth + 1):
            samples = np.exp(np.stack([self._log_nu_level(system, k, n, h_value) for n in range(n0, n1 + 1)]))
            window_lo, window_hi = samples.min(axis=0), samples.max(axis=0)

            # diam < 1, so the conservative ends use h_hi below and h_lo above
            log_diam = self.geometry.build_atlas(system, k).log_diam
            gibbs_lo = np.exp(h.hi * log_diam) / eta
            gibbs_hi = np.exp(h.lo * log_diam) * eta
            lo = np.clip(window_lo, gibbs_lo, gibbs_hi)
            hi = np.clip(window_hi, gibbs_lo, gibbs_hi)

            mid = _renormalize_children(samples.mean(axis=0), mid, system.n_branches)
            levels.append(LevelWeights(
                level=k,
                lo=np.minimum(lo, mid),
                mid=mid,
                hi=np.maximum(hi, mid),
                spread=window_hi - window_lo,
            ))
        return levels

    def build_surrogate(
        self,
        system: CookieCutterSystem,
        h: Optional[RootEnclosure] = None,
        window: Optional[Tuple[int, int]] = None,
        depth: Optional[int] = None,
    ) -> GibbsSurrogate:
        """
        Weights for every word up to depth; affine systems get the exact
        product weights and zero-width brackets
        """
        depth = settings.DEFAULT_DEPTH if depth is None else depth
        if depth < 0:
            raise ValidationError(f"Depth must be non-negative, got {depth}")
        window = self._validate_window(window or self.window)
        start_time = time.time()

        check_level_cap(system.n_branches, depth, self.cap)
        if not system.is_affine:
            check_level_cap(system.n_branches, depth + window[1], self.cap)
        h = h or self.pressure.hausdorff_dimension(system)
        eta, L = self.gibbs_constants(system, h)

        if system.is_affine:
            levels = self._affine_levels(system, h.point, depth)
        else:
            levels = self._analytic_levels(system, h, window, depth, eta)

        repository = WeightRepository()
        for level_weights in levels:
            words = [Word.from_index(i, level_weights.level, system.n_branches) for i in range(len(level_weights))]
            repository.store_level(words, level_weights)

        surrogate = GibbsSurrogate(
            system=system,
            h=h,
            window=window,
            depth=depth,
            eta=eta,
            L=L,
            levels=tuple(levels),
            weights=repository,
        )
        elapsed = time.time() - start_time
        logger.info(
            f"Gibbs surrogate for {system.name}: depth {depth}, window {window}, "
            f"{repository.count()} weights, log eta = {math.log(eta):.4g} in {elapsed:.2f}s"
        )
        return surrogate

    def measure_weight(self, surrogate: GibbsSurrogate, word: Word) -> CylinderWeight:
        """
        Cached weight for |sigma| <= depth; deeper words get the raw window
        statistics intersected with the eta-bracket (no renormalization)
        """
        system = surrogate.system
        word.validate(system.n_branches)
        if len(word) <= surrogate.depth:
            return surrogate.weight(word)

        if system.is_affine:
            probabilities = np.array([abs(s) ** surrogate.h_value for s in system.ratios])
            probabilities /= probabilities.sum()
            value = float(np.prod([probabilities[s - 1] for s in word.symbols]))
            return CylinderWeight(word=word, lo=value, mid=value, hi=value)

        n0, n1 = surrogate.window
        samples = np.array([self.nu_n(system, word, n, surrogate.h_value) for n in range(n0, n1 + 1)])
        diam = self.geometry.cylinder_diameter(system, word)
        gibbs_lo = diam ** surrogate.h.hi / surrogate.eta
        gibbs_hi = diam ** surrogate.h.lo * surrogate.eta
        mid = float(samples.mean())
        logger.debug(f"Weight for {word} computed beyond surrogate depth {surrogate.depth}")
        return CylinderWeight(
            word=word,
            lo=min(float(np.clip(samples.min(), gibbs_lo, gibbs_hi)), mid),
            mid=mid,
            hi=max(float(np.clip(samples.max(), gibbs_lo, gibbs_hi)), mid),
        )

    def discrete_measure(self, surrogate: GibbsSurrogate, level: int, atom_rule: str = 'midpoint') -> DiscreteMeasure1D:
        """
        One atom per level-k cylinder at its midpoint or left end, weight w_mid;
        the largest cylinder diameter is kept as the discretization radius
        """
        if atom_rule not in ATOM_RULES:
            raise ValidationError(f"Unknown atom rule '{atom_rule}', expected one of {ATOM_RULES}")
        level_weights = surrogate.level_weights(level)
        atlas = self.geometry.build_atlas(surrogate.system, level)

        if atom_rule == 'midpoint':
            atoms = 0.5 * (atlas.left + atlas.right)
        else:
            atoms = atlas.left.copy()
        order = np.argsort(atoms, kind='stable')
        weights = level_weights.mid[order]
        return DiscreteMeasure1D(
            atoms=atoms[order],
            weights=weights / weights.sum(),
            level=level,
            atom_rule=atom_rule,
            radius=float(atlas.diam.max()),
        )

    # ------------------------------------------------------------------
    # checks
    # ------------------------------------------------------------------

    def run_checks(self, surrogate: GibbsSurrogate, depth: Optional[int] = None) -> VerificationReport:
        return self.gibbs_bracket_check(surrogate, depth)

    def gibbs_bracket_check(self, surrogate: GibbsSurrogate, depth: Optional[int] = None) -> VerificationReport:
        """
        eta^-1 |J|^h <= w_mid <= eta |J|^h for every cached word,
        L^-1 w(s) w(t) <= w(st) <= L w(s) w(t) for |st| <= depth,
        sibling additivity and w(empty) = 1
        """
        depth = surrogate.depth if depth is None else depth
        if not 0 <= depth <= surrogate.depth:
            raise ValidationError(f"Check depth must be within 0..{surrogate.depth}, got {depth}")

        system = surrogate.system
        rtol = settings.CHECK_RTOL
        exact = surrogate.exact
        report = VerificationReport(title=f"gibbs[{system.name}]")
        mids = [surrogate.level_weights(k).mid for k in range(depth + 1)]

        report.add(self._check_eta_bracket(surrogate, mids, rtol))
        report.add(self._check_quasi_multiplicativity(surrogate, mids, rtol))

        worst_gap, witness = 0.0, ''
        for k in range(1, depth + 1):
            sums = mids[k].reshape(len(mids[k - 1]), system.n_branches).sum(axis=1)
            gaps = np.abs(sums - mids[k - 1]) / mids[k - 1]
            position = int(gaps.argmax())
            if gaps[position] > worst_gap:
                worst_gap, witness = float(gaps[position]), str(Word.from_index(position, k - 1, system.n_branches))
        report.add(CheckResult(
            name='sibling_additivity',
            passed=worst_gap <= 1e-12,
            worst=worst_gap,
            witness=witness,
            detail='max relative |sum of children - parent|',
            exact=exact,
        ))
        report.add(CheckResult(
            name='root_normalization',
            passed=bool(mids[0][0] == 1.0),
            worst=float(mids[0][0]),
            exact=exact,
        ))

        summary = report.summary()
        logger.info(f"Gibbs checks for {system.name} to depth {depth}: {summary['passed']}/{summary['total']} passed")
        return report

    def _check_eta_bracket(self, surrogate: GibbsSurrogate, mids: List[np.ndarray], rtol: float) -> CheckResult:
        system = surrogate.system
        log_eta = math.log(surrogate.eta)
        h = surrogate.h
        worst, witness, passed = 0.0, '', True
        for k in range(1, len(mids)):
            log_diam = self.geometry.build_atlas(system, k).log_diam
            log_mid = np.log(mids[k])
            below = log_mid < h.hi * log_diam - log_eta - rtol
            above = log_mid > h.lo * log_diam + log_eta + rtol
            if below.any() or above.any():
                passed = False
                witness = witness or str(Word.from_index(int(np.argmax(below | above)), k, system.n_branches))
            deviation = np.abs(log_mid - surrogate.h_value * log_diam)
            position = int(deviation.argmax())
            if deviation[position] > worst:
                worst = float(deviation[position])
                if passed:
                    witness = str(Word.from_index(position, k, system.n_branches))
        return CheckResult(
            name='gibbs_bracket',
            passed=passed,
            worst=math.exp(worst),
            witness=witness,
            detail=f"max w / |J|^h deviation, eta = {surrogate.eta:.6g}",
            exact=surrogate.exact,
        )

    def _check_quasi_multiplicativity(self, surrogate: GibbsSurrogate, mids: List[np.ndarray], rtol: float) -> CheckResult:
        n = surrogate.system.n_branches
        depth = len(mids) - 1
        bound = math.log(surrogate.L)
        worst, witness = 0.0, ''
        for len_a in range(1, depth):
            for len_b in range(1, depth - len_a + 1):
                shape = (len(mids[len_a]), len(mids[len_b]))
                log_ratio = np.log(mids[len_a + len_b].reshape(shape)) - np.add.outer(np.log(mids[len_a]), np.log(mids[len_b]))
                position = int(np.abs(log_ratio).argmax())
                if abs(log_ratio.flat[position]) > worst:
                    worst = float(abs(log_ratio.flat[position]))
                    row, col = np.unravel_index(position, shape)
                    witness = (
                        f"sigma={Word.from_index(int(row), len_a, n)}, "
                        f"tau={Word.from_index(int(col), len_b, n)}"
                    )
        return CheckResult(
            name='measure_quasi_multiplicativity',
            passed=worst <= bound + rtol,
            worst=math.exp(worst),
            witness=witness,
            detail=f"max w(st) / (w(s) w(t)) deviation <= L = {surrogate.L:.6g}",
            exact=surrogate.exact,
        )

    def compare_over_antichain(self, surrogate: GibbsSurrogate, antichain: Antichain, depth: Optional[int] = None) -> CheckResult:
        """
        L^-1 w(sigma) w(omega') <= w(sigma omega') <= L w(sigma) w(omega')
        for sigma in the antichain and every extension up to depth
        """
        depth = surrogate.depth if depth is None else depth
        if depth > surrogate.depth:
            raise ValidationError(f"Comparison depth {depth} exceeds surrogate depth {surrogate.depth}")
        n = surrogate.system.n_branches
        bound = math.log(surrogate.L)
        worst, witness = 0.0, ''

        for sigma in antichain:
            sigma.validate(n)
            if len(sigma) == 0:
                raise ValidationError('Antichains may not contain the empty word')
            w_sigma = surrogate.level_weights(len(sigma)).mid[sigma.index(n)] if len(sigma) <= depth else None
            for extra in range(1, depth - len(sigma) + 1):
                block = n ** extra
                start = sigma.index(n) * block
                extended = surrogate.level_weights(len(sigma) + extra).mid[start:start + block]
                log_ratio = np.log(extended) - np.log(w_sigma) - np.log(surrogate.level_weights(extra).mid)
                position = int(np.abs(log_ratio).argmax())
                if abs(log_ratio[position]) > worst:
                    worst = float(abs(log_ratio[position]))
                    witness = f"sigma={sigma}, omega'={Word.from_index(position, extra, n)}"

        return CheckResult(
            name='antichain_measure_comparison',
            passed=worst <= bound + settings.CHECK_RTOL,
            worst=math.exp(worst),
            witness=witness,
            detail=f"|Gamma| = {len(antichain)}, bound L = {surrogate.L:.6g}",
            exact=surrogate.exact,
        )

    # ------------------------------------------------------------------
    # window stability
    # ------------------------------------------------------------------

    def window_stability(self, surrogate: GibbsSurrogate) -> pd.DataFrame:
        """Spread of nu_n over the averaging window, per level"""
        rows = []
        for level_weights in surrogate.levels[1:]:
            spread = level_weights.spread if level_weights.spread is not None else np.zeros(len(level_weights))
            relative = spread / level_weights.mid
            rows.append({
                'level': level_weights.level,
                'max_spread': float(spread.max()),
                'max_relative_spread': float(relative.max()),
                'mean_spread': float(spread.mean()),
            })
        frame = pd.DataFrame(rows, columns=['level', 'max_spread', 'max_relative_spread', 'mean_spread'])
        if len(frame) and frame['max_relative_spread'].max() > 0.1:
            logger.warning(
                f"Averaging window {surrogate.window} for {surrogate.system.name} is unstable: "
                f"relative spread up to {frame['max_relative_spread'].max():.3g}"
            )
        return frame

    def spread_by_window_start(
        self, system: CookieCutterSystem, h: float, level: int, starts: Sequence[int], length: int
    ) -> pd.DataFrame:
        """Max spread of nu_n over [n0, n0 + length] as the start n0 grows"""
        if length < 0:
            raise ValidationError(f"Window length must be non-negative, got {length}")
        rows = []
        for n0 in starts:
            self._validate_window((n0, n0 + length))
            samples = np.exp(np.stack([self._log_nu_level(system, level, n, h) for n in range(n0, n0 + length + 1)]))
            rows.append({'n0': n0, 'max_spread': float((samples.max(axis=0) - samples.min(axis=0)).max())})
        return pd.DataFrame(rows, columns=['n0', 'max_spread'])

    # ------------------------------------------------------------------
    # exports
    # ------------------------------------------------------------------

    def measure_frame(self, surrogate: GibbsSurrogate, level: int) -> pd.DataFrame:
        """word, left, right, diam, w_lo, w_mid, w_hi for every level-k cylinder"""
        level_weights = surrogate.level_weights(level)
        atlas = self.geometry.build_atlas(surrogate.system, level)
        return pd.DataFrame({
            'word': [str(w) for w in atlas.words()],
            'left': atlas.left,
            'right': atlas.right,
            'diam': atlas.diam,
            'w_lo': level_weights.lo,
            'w_mid': level_weights.mid,
            'w_hi': level_weights.hi,
        })
