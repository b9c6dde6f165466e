"""
Pressure models: finite-level brackets, root enclosures and sampled curves
"""
import math
from dataclasses import dataclass, field
from typing import List, Optional

import numpy as np
import pandas as pd

from core.reports import VerificationReport


@dataclass(frozen=True)
class PressureBracket:
    """
    [lo, hi] enclosing a pressure limit, from the level-k sum

    slack is the per-level sub/super-additivity constant already divided by k;
    extrapolated is the Aitken value of (1/k) log S_k, a diagnostic only.
    """

    level: int
    lo: float
    mid: float
    hi: float
    slack: float = 0.0
    extrapolated: Optional[float] = None

    @property
    def width(self) -> float:
        return self.hi - self.lo

    @property
    def certified_positive(self) -> bool:
        return self.lo > 0

    @property
    def certified_negative(self) -> bool:
        return self.hi < 0

    def contains(self, value: float, atol: float = 0.0) -> bool:
        return self.lo - atol <= value <= self.hi + atol


@dataclass(frozen=True)
class RootEnclosure:
    """
    Certified interval for the zero of a strictly decreasing function

    ambiguous is set when the sign could not be certified somewhere inside
    the final interval, so its width is limited by the brackets, not by tol.
    """

    lo: float
    hi: float
    estimate: float
    iterations: int = 0
    ambiguous: bool = False
    report: Optional[VerificationReport] = field(default=None, compare=False)

    @property
    def width(self) -> float:
        return self.hi - self.lo

    @property
    def mid(self) -> float:
        return 0.5 * (self.lo + self.hi)

    @property
    def point(self) -> float:
        """The point estimate when it lies inside the enclosure, else the midpoint"""
        return self.estimate if self.contains(self.estimate) else self.mid

    def contains(self, value: float, atol: float = 0.0) -> bool:
        return self.lo - atol <= value <= self.hi + atol

    def overlaps(self, other: 'RootEnclosure', atol: float = 0.0) -> bool:
        return self.lo - atol <= other.hi and other.lo - atol <= self.hi

    def to_dict(self) -> dict:
        return {
            'lo': self.lo,
            'mid': self.mid,
            'hi': self.hi,
            'estimate': self.estimate,
            'width': self.width,
            'ambiguous': self.ambiguous,
        }


@dataclass(frozen=True)
class PressurePoint:
    """One sample of the temperature function"""

    q: float
    beta_lo: float
    beta_mid: float
    beta_hi: float

    @property
    def width(self) -> float:
        return self.beta_hi - self.beta_lo


@dataclass(frozen=True)
class KappaResult:
    """
    q_r from the line intersection beta(q) = r q, and kappa_r = r q_r / (1 - q_r)

    kappa_from_beta is beta(q_r) / (1 - q_r) at the point estimate;
    direct is the enclosure of the zero of q -> P(q, r q).
    """

    r: float
    q: RootEnclosure
    kappa_lo: float
    kappa_mid: float
    kappa_hi: float
    beta_at_q: float
    kappa_from_beta: float
    direct: RootEnclosure
    direct_kappa_lo: float
    direct_kappa_hi: float
    report: Optional[VerificationReport] = field(default=None, compare=False)

    @property
    def width(self) -> float:
        return self.kappa_hi - self.kappa_lo

    def contains(self, value: float, atol: float = 0.0) -> bool:
        return self.kappa_lo - atol <= value <= self.kappa_hi + atol


def kappa_from_q(r: float, q: float) -> float:
    """kappa = r q / (1 - q), increasing in q on [0, 1)"""
    if q >= 1:
        return math.inf
    return r * q / (1.0 - q)


@dataclass(frozen=True)
class IntersectionRow:
    """Intersection of y = beta(q) with y = r q, and the intercept of the line to (1, 0)"""

    r: float
    q_r: float
    beta_at_qr: float
    kappa_r_lo: float
    kappa_r_hi: float

    @property
    def intercept(self) -> float:
        return self.beta_at_qr / (1.0 - self.q_r)


@dataclass
class PressureCurve:
    """Sampled temperature function plus the r q intersection rows for the requested r"""

    points: List[PressurePoint]
    figure1: List[IntersectionRow] = field(default_factory=list)
    level: int = 0

    def __len__(self) -> int:
        return len(self.points)

    @property
    def q(self) -> np.ndarray:
        return np.array([p.q for p in self.points])

    @property
    def beta_lo(self) -> np.ndarray:
        return np.array([p.beta_lo for p in self.points])

    @property
    def beta_mid(self) -> np.ndarray:
        return np.array([p.beta_mid for p in self.points])

    @property
    def beta_hi(self) -> np.ndarray:
        return np.array([p.beta_hi for p in self.points])

    def to_frame(self, spectrum: Optional[pd.DataFrame] = None) -> pd.DataFrame:
        frame = pd.DataFrame({
            'q': self.q,
            'beta_lo': self.beta_lo,
            'beta_mid': self.beta_mid,
            'beta_hi': self.beta_hi,
        })
        if spectrum is not None:
            frame['alpha'] = spectrum['alpha'].to_numpy()
            frame['f_alpha'] = spectrum['f_alpha'].to_numpy()
        return frame

    def figure1_frame(self) -> pd.DataFrame:
        return pd.DataFrame(
            [
                {
                    'r': row.r,
                    'q_r': row.q_r,
                    'beta_at_qr': row.beta_at_qr,
                    'kappa_r_lo': row.kappa_r_lo,
                    'kappa_r_hi': row.kappa_r_hi,
                }
                for row in self.figure1
            ],
            columns=['r', 'q_r', 'beta_at_qr', 'kappa_r_lo', 'kappa_r_hi'],
        )
