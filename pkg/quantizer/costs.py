"""
Cluster costs for 1-D quantization

A cluster is a contiguous run of atoms i..j (inclusive). Its cost is
min over a of sum w_l |x_l - a|^r; tables hold the cost and the minimizing
center for every (i, j) with i <= j and +inf below the diagonal.
"""
import math
from typing import Optional, Tuple

import numpy as np

from core.exceptions import ValidationError
from quantdim import settings

GOLDEN = (math.sqrt(5.0) - 1.0) / 2.0
TIE_RTOL = 1e-14


def _check_order(r: float) -> None:
    if not r > 0:
        raise ValidationError(f"Quantization order must be positive, got {r}")


def _masked_objective(x: np.ndarray, w: np.ndarray, centers: np.ndarray, r: float) -> np.ndarray:
    """Row i: sum_{l >= i} w_l |x_l - centers_i|^r"""
    terms = w[np.newaxis, :] * np.abs(x[np.newaxis, :] - centers[:, np.newaxis]) ** r
    return np.triu(terms).sum(axis=1)


def _golden_section_centers(x: np.ndarray, w: np.ndarray, r: float) -> np.ndarray:
    """
    Minimizers for every cluster i..last, all clusters refined together;
    one objective evaluation per round
    """
    lo = x.copy()
    hi = np.full_like(x, x[-1])
    left = hi - GOLDEN * (hi - lo)
    right = lo + GOLDEN * (hi - lo)
    f_left = _masked_objective(x, w, left, r)
    f_right = _masked_objective(x, w, right, r)
    while np.max(hi - lo) > settings.GOLDEN_TOL:
        move_down = f_left < f_right
        hi = np.where(move_down, right, hi)
        lo = np.where(move_down, lo, left)
        trial = np.where(move_down, hi - GOLDEN * (hi - lo), lo + GOLDEN * (hi - lo))
        f_trial = _masked_objective(x, w, trial, r)
        left, right, f_left, f_right = (
            np.where(move_down, trial, right),
            np.where(move_down, left, trial),
            np.where(move_down, f_trial, f_right),
            np.where(move_down, f_left, f_trial),
        )
    return 0.5 * (lo + hi)


def cluster_cost(atoms, weights, start: int, stop: int, r: float) -> Tuple[float, float]:
    """
    (center, cost) for atoms start..stop; r = 2 uses the weighted mean,
    r = 1 the weighted median (midpoint on ties), r < 1 an atom scan and
    other r golden-section search to 1e-12
    """
    _check_order(r)
    atoms = np.asarray(atoms, dtype=float)
    weights = np.asarray(weights, dtype=float)
    if not 0 <= start <= stop < len(atoms):
        raise ValidationError(f"Empty or invalid cluster range {start}..{stop} for {len(atoms)} atoms")

    x = atoms[start:stop + 1]
    w = weights[start:stop + 1]
    if r == 2:
        center = float(np.sum(w * x) / np.sum(w))
    elif r == 1:
        cumulative = np.cumsum(w)
        half = cumulative[-1] / 2.0
        k = int(np.searchsorted(cumulative, half, side='left'))
        k = min(k, len(x) - 1)
        if k < len(x) - 1 and abs(cumulative[k] - half) <= TIE_RTOL * cumulative[-1]:
            center = 0.5 * (x[k] + x[k + 1])
        else:
            center = float(x[k])
    elif r < 1:
        scan = np.sum(w[np.newaxis, :] * np.abs(x[np.newaxis, :] - x[:, np.newaxis]) ** r, axis=1)
        center = float(x[int(np.argmin(scan))])
    else:
        center = float(_golden_section_centers(x, w, r)[0])
    return center, float(np.sum(w * np.abs(x - center) ** r))


class ClusterCostTable:
    """
    All-pairs cluster costs for one measure and order r

    boundary, when given as an open interval (a, b), caps every atom's
    distance at its distance to the complement, giving the constrained cost.
    """

    def __init__(self, atoms: np.ndarray, weights: np.ndarray, r: float, boundary: Optional[Tuple[float, float]] = None):
        _check_order(r)
        self.atoms = np.asarray(atoms, dtype=float)
        self.weights = np.asarray(weights, dtype=float)
        self.r = r
        self.boundary = boundary
        m = len(self.atoms)
        self.cost = np.full((m, m), np.inf)
        self.center = np.full((m, m), np.nan)

        if r == 2:
            self._fill_variance()
        elif r == 1:
            self._fill_median()
        elif r < 1:
            self._fill_atom_scan()
        else:
            self._fill_golden_section()

        if boundary is not None:
            self._apply_boundary(boundary)

    def __len__(self) -> int:
        return len(self.atoms)

    @property
    def boundary_distance(self) -> np.ndarray:
        left, right = self.boundary
        return np.maximum(np.minimum(self.atoms - left, right - self.atoms), 0.0)

    def _fill_variance(self) -> None:
        x = self.atoms - np.average(self.atoms, weights=self.weights)
        w = self.weights
        s0 = np.concatenate([[0.0], np.cumsum(w)])
        s1 = np.concatenate([[0.0], np.cumsum(w * x)])
        s2 = np.concatenate([[0.0], np.cumsum(w * x * x)])
        i, j = np.triu_indices(len(x))
        mass = s0[j + 1] - s0[i]
        first = s1[j + 1] - s1[i]
        second = s2[j + 1] - s2[i]
        cost = np.maximum(second - first * first / mass, 0.0)
        cost[i == j] = 0.0
        self.cost[i, j] = cost
        self.center[i, j] = first / mass + np.average(self.atoms, weights=self.weights)
        self.center[np.diag_indices(len(x))] = self.atoms

    def _fill_median(self) -> None:
        x, w = self.atoms, self.weights
        cum_w = np.concatenate([[0.0], np.cumsum(w)])
        cum_x = np.concatenate([[0.0], np.cumsum(w * x)])
        for j in range(len(x)):
            i = np.arange(j + 1)
            half = 0.5 * (cum_w[j + 1] - cum_w[i])
            target = cum_w[i] + half
            k = np.clip(np.searchsorted(cum_w, target, side='left') - 1, i, j)
            tie = (k < j) & (np.abs(cum_w[k + 1] - target) <= TIE_RTOL * cum_w[-1])
            center = np.where(tie, 0.5 * (x[k] + x[np.minimum(k + 1, j)]), x[k])
            left = center * (cum_w[k + 1] - cum_w[i]) - (cum_x[k + 1] - cum_x[i])
            right = (cum_x[j + 1] - cum_x[k + 1]) - center * (cum_w[j + 1] - cum_w[k + 1])
            self.cost[i, j] = np.maximum(left + right, 0.0)
            self.center[i, j] = center

    def _fill_atom_scan(self) -> None:
        x, w, r = self.atoms, self.weights, self.r
        terms = w[np.newaxis, :] * np.abs(x[np.newaxis, :] - x[:, np.newaxis]) ** r
        cumulative = np.concatenate([np.zeros((len(x), 1)), np.cumsum(terms, axis=1)], axis=1)
        for j in range(len(x)):
            # scan[i, a]: cost of cluster i..j with the center on atom a
            scan = cumulative[:j + 1, j + 1][np.newaxis, :] - cumulative[:j + 1, :j + 1].T
            scan[np.tril_indices(j + 1, -1)] = np.inf
            best = np.argmin(scan, axis=1)
            self.cost[:j + 1, j] = scan[np.arange(j + 1), best]
            self.center[:j + 1, j] = x[best]

    def _fill_golden_section(self) -> None:
        x, w, r = self.atoms, self.weights, self.r
        for j in range(len(x)):
            centers = _golden_section_centers(x[:j + 1], w[:j + 1], r)
            self.cost[:j + 1, j] = _masked_objective(x[:j + 1], w[:j + 1], centers, r)
            self.center[:j + 1, j] = centers

    def _apply_boundary(self, boundary: Tuple[float, float]) -> None:
        """
        Constrained costs. Atom l is capped once |x_l - a| >= d_l, i.e. outside
        ((a + left) / 2, (a + right) / 2), so the uncapped atoms always form a
        contiguous window. The minimum sits at a kink (an atom or x_l -+ d_l)
        or at the unconstrained center of the window around it.
        """
        left, right = boundary
        if not left < right:
            raise ValidationError(f"Boundary interval must satisfy a < b, got {boundary}")
        x, w, r = self.atoms, self.weights, self.r
        floor = self.boundary_distance
        unconstrained = self.center.copy()

        for j in range(len(x)):
            xs, ws, fs = x[:j + 1], w[:j + 1], floor[:j + 1]
            rows = np.arange(j + 1)

            kinks = np.clip(np.concatenate([xs, xs - fs, xs + fs]), left, right)
            terms = ws[np.newaxis, :] * np.minimum(np.abs(xs[np.newaxis, :] - kinks[:, np.newaxis]), fs) ** r
            suffix = np.cumsum(terms[:, ::-1], axis=1)[:, ::-1]
            best = np.argmin(suffix, axis=0)
            cost = suffix[best, rows]
            center = kinks[best]

            edges = np.unique(np.clip(np.concatenate([2 * xs - left, 2 * xs - right, [left, right]]), left, right))
            samples = 0.5 * (edges[1:] + edges[:-1])
            first = np.searchsorted(xs, 0.5 * (samples + left), side='right')
            last = np.searchsorted(xs, 0.5 * (samples + right), side='left') - 1
            p = np.maximum(first[np.newaxis, :], rows[:, np.newaxis])
            q = np.broadcast_to(np.minimum(last, j)[np.newaxis, :], p.shape)
            # windows only move at edges, so repeats are adjacent along a row
            fresh = np.ones(p.shape, dtype=bool)
            fresh[:, 1:] = (p[:, 1:] != p[:, :-1]) | (q[:, 1:] != q[:, :-1])
            keep = fresh & (p <= q)
            owner = np.broadcast_to(rows[:, np.newaxis], p.shape)[keep]
            p, q = p[keep], q[keep]

            stationary = unconstrained[p, q]
            own_first = np.maximum(np.searchsorted(xs, 0.5 * (stationary + left), side='right'), owner)
            own_last = np.minimum(np.searchsorted(xs, 0.5 * (stationary + right), side='left') - 1, j)
            consistent = (own_first == p) & (own_last == q)
            owner, stationary = owner[consistent], stationary[consistent]

            if len(owner):
                distance = np.minimum(np.abs(xs[np.newaxis, :] - stationary[:, np.newaxis]), fs)
                inside = rows[np.newaxis, :] >= owner[:, np.newaxis]
                values = np.where(inside, ws * distance ** r, 0.0).sum(axis=1)
                order = np.lexsort((values, owner))
                owned, position = np.unique(owner[order], return_index=True)
                candidate_cost = values[order][position]
                better = candidate_cost < cost[owned]
                cost[owned[better]] = candidate_cost[better]
                center[owned[better]] = stationary[order][position][better]

            self.cost[:j + 1, j] = cost
            self.center[:j + 1, j] = center

    def lookup(self, start: int, stop: int) -> Tuple[float, float]:
        return float(self.center[start, stop]), float(self.cost[start, stop])
