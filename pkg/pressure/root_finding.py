"""
Certified bisection for strictly decreasing functions known only through brackets

bracket_fn(t) returns (lo, hi) with lo <= F(t) <= hi. A point is certified
positive when lo > 0 and certified negative when hi < 0; the root is kept
between a certified-positive left end and a certified-negative right end.
"""
import logging
import math
from typing import Callable, Optional, Tuple

from scipy.optimize import brentq

from core.exceptions import BrokenSystemError
from quantdim import settings

from .models import RootEnclosure

logger = logging.getLogger(__name__)

BracketFn = Callable[[float], Tuple[float, float]]


def _expand(bracket_fn: BracketFn, start: float, step: float, positive: bool, limit: int) -> Optional[float]:
    """Walk from start by doubling steps until the sign is certified"""
    point = start
    for _ in range(limit):
        lo, hi = bracket_fn(point)
        if (lo > 0) if positive else (hi < 0):
            return point
        point += step
        step *= 2
    return None


def _refine_boundary(bracket_fn: BracketFn, certified: float, other: float, positive: bool, tol: float, max_iter: int) -> float:
    """Move a certified end toward other while the sign stays certified"""
    iterations = 0
    while abs(other - certified) > tol and iterations < max_iter:
        candidate = 0.5 * (certified + other)
        lo, hi = bracket_fn(candidate)
        if (lo > 0) if positive else (hi < 0):
            certified = candidate
        else:
            other = candidate
        iterations += 1
    return certified


def certified_root(
    bracket_fn: BracketFn,
    lower: float,
    upper: float,
    tol: float,
    mid_fn: Optional[Callable[[float], float]] = None,
    max_iter: Optional[int] = None,
    expansions: Optional[int] = None,
    fixed_range: bool = False,
) -> RootEnclosure:
    """
    Enclose the zero of a strictly decreasing F

    With fixed_range the root is known to lie in [lower, upper] and the ends
    are accepted without certification; otherwise the ends are pushed outward
    until their signs are certified. mid_fn, when given, yields the point
    estimate by brentq inside the final search interval.
    """
    max_iter = max_iter or settings.BISECTION_MAX_ITER
    expansions = expansions or settings.SEARCH_EXPANSIONS
    if not lower < upper:
        raise ValueError(f"Search range must satisfy lower < upper, got [{lower}, {upper}]")

    if fixed_range:
        left, right = lower, upper
        left_certified = bracket_fn(lower)[0] > 0
        right_certified = bracket_fn(upper)[1] < 0
    else:
        span = max(upper - lower, 1.0)
        left = _expand(bracket_fn, lower, -span, True, expansions)
        right = _expand(bracket_fn, upper, span, False, expansions)
        if left is None or right is None:
            raise BrokenSystemError(
                f"No certified sign change found around [{lower}, {upper}]",
                {'left_certified': left is not None, 'right_certified': right is not None},
            )
        left_certified = right_certified = True

    search = (left, right)
    iterations = 0
    ambiguous = False

    while right - left > tol and iterations < max_iter:
        middle = 0.5 * (left + right)
        lo, hi = bracket_fn(middle)
        iterations += 1
        if lo > 0:
            left, left_certified = middle, True
        elif hi < 0:
            right, right_certified = middle, True
        else:
            # sign undecidable at middle: tighten each end separately
            ambiguous = True
            if left_certified:
                left = _refine_boundary(bracket_fn, left, middle, True, tol, max_iter)
            if right_certified:
                right = _refine_boundary(bracket_fn, right, middle, False, tol, max_iter)
            logger.debug(f"Ambiguous sign at {middle:.12g}; enclosure [{left:.12g}, {right:.12g}]")
            break

    ambiguous = ambiguous or not (left_certified and right_certified)
    estimate = 0.5 * (left + right)
    if mid_fn is not None:
        estimate = _point_estimate(mid_fn, search, estimate)

    return RootEnclosure(lo=left, hi=right, estimate=estimate, iterations=iterations, ambiguous=ambiguous)


def _point_estimate(mid_fn: Callable[[float], float], search: Tuple[float, float], fallback: float) -> float:
    a, b = search
    fa, fb = mid_fn(a), mid_fn(b)
    if fa == 0:
        return a
    if fb == 0:
        return b
    if math.copysign(1.0, fa) == math.copysign(1.0, fb):
        logger.warning(f"Midpoint function does not change sign on [{a:.6g}, {b:.6g}]; using bracket centre")
        return fallback
    return float(brentq(mid_fn, a, b, xtol=1e-14, maxiter=settings.BISECTION_MAX_ITER))
