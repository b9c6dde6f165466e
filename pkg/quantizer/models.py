"""
Quantizer models: optimal center sets, error curves and their fits
"""
import math
from dataclasses import dataclass, field
from typing import Optional, Tuple

import numpy as np
import pandas as pd


@dataclass(frozen=True, eq=False)
class QuantizerResult:
    """
    Optimal n-center set for a 1-D discrete measure

    starts[k] is the index of the first atom in cluster k; clusters are
    contiguous runs of atoms in increasing order.
    """

    n: int
    r: float
    centers: np.ndarray
    starts: Tuple[int, ...]
    error: float
    cluster_masses: np.ndarray
    cluster_costs: np.ndarray

    @property
    def boundaries(self) -> np.ndarray:
        """Nearest-center split points between consecutive centers"""
        return 0.5 * (self.centers[1:] + self.centers[:-1])

    @property
    def e(self) -> float:
        return self.error ** (1.0 / self.r)

    def to_frame(self) -> pd.DataFrame:
        return pd.DataFrame({
            'center_index': np.arange(len(self.centers)),
            'position': self.centers,
            'cluster_mass': self.cluster_masses,
            'cluster_cost': self.cluster_costs,
        })


@dataclass(frozen=True, eq=False)
class ErrorCurve:
    """V_{n,r} over an increasing n grid; V = 0 once n reaches the atom count"""

    r: float
    n_values: np.ndarray
    V: np.ndarray
    atom_count: Optional[int] = None
    radius: float = 0.0
    kappa: Optional[float] = None

    def __len__(self) -> int:
        return len(self.n_values)

    @property
    def e(self) -> np.ndarray:
        return self.V ** (1.0 / self.r)

    def coefficients(self, kappa: float) -> np.ndarray:
        """n V_{n,r}^(kappa / r)"""
        return self.n_values * self.V ** (kappa / self.r)

    def with_kappa(self, kappa: float) -> 'ErrorCurve':
        return ErrorCurve(self.r, self.n_values, self.V, self.atom_count, self.radius, kappa)

    def to_frame(self) -> pd.DataFrame:
        frame = pd.DataFrame({'n': self.n_values, 'V': self.V, 'e': self.e})
        frame['coeff'] = self.coefficients(self.kappa) if self.kappa is not None else math.nan
        return frame


@dataclass(frozen=True)
class DrEstimate:
    """Least-squares slope of r log n against -log V_{n,r}"""

    slope: float
    width: float
    intercept: float
    r_squared: float
    n_used: Tuple[int, ...] = field(default_factory=tuple)

    @property
    def lo(self) -> float:
        return self.slope - self.width

    @property
    def hi(self) -> float:
        return self.slope + self.width

    def to_dict(self) -> dict:
        return {
            'D_r': self.slope,
            'width': self.width,
            'intercept': self.intercept,
            'r_squared': self.r_squared,
            'n_used': ' '.join(str(n) for n in self.n_used),
        }


@dataclass(frozen=True)
class CoefficientBand:
    """
    min and max of n V^(kappa/r) over the fit range

    growth is the log-log slope of the coefficient against n; a bounded
    band has growth near zero.
    """

    kappa: float
    lo: float
    hi: float
    growth: float
    diverging: bool

    @property
    def ratio(self) -> float:
        return self.hi / self.lo

    def to_dict(self) -> dict:
        return {
            'kappa': self.kappa,
            'band_lo': self.lo,
            'band_hi': self.hi,
            'ratio': self.ratio,
            'growth': self.growth,
            'diverging': self.diverging,
        }
