"""
Cookie-cutter system models

Branch inverses are evaluated on numpy arrays in extended precision
(np.longdouble) so that composed endpoints lose as little as possible.
"""
import math
from abc import ABC, abstractmethod
from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional, Tuple

import numpy as np
import pandas as pd

from core.exceptions import ValidationError
from words.models import Word


def distortion_from_defining_data(c: float, gamma: float, b: float) -> float:
    """xi = exp(c / (b^gamma - 1)); never below 1"""
    if b <= 1:
        raise ValidationError(f"Expansion lower bound b must exceed 1, got {b}")
    if not 0 < gamma <= 1:
        raise ValidationError(f"Hoelder exponent gamma must lie in (0, 1], got {gamma}")
    if c < 0:
        raise ValidationError(f"Hoelder constant c must be non-negative, got {c}")
    return max(math.exp(c / (b ** gamma - 1.0)), 1.0)


class BranchMap(ABC):
    """Inverse branch phi_j: [0, 1] -> J_j"""

    kind = 'abstract'

    @abstractmethod
    def value(self, y: np.ndarray) -> np.ndarray:
        """phi_j(y)"""
        pass

    @abstractmethod
    def derivative(self, y: np.ndarray) -> np.ndarray:
        """phi_j'(y), signed"""
        pass

    def abs_derivative(self, y: np.ndarray) -> np.ndarray:
        return np.abs(self.derivative(y))

    def image(self) -> Tuple[float, float]:
        """J_j = phi_j([0, 1]) with sorted endpoints"""
        ends = self.value(np.array([0.0, 1.0], dtype=np.longdouble)).astype(float)
        return float(ends.min()), float(ends.max())


@dataclass(frozen=True)
class AffineBranch(BranchMap):
    """phi(y) = offset + ratio * y; a negative ratio reverses orientation"""

    ratio: float
    offset: float
    kind = 'affine'

    def __post_init__(self):
        if not 0 < abs(self.ratio) < 1:
            raise ValidationError(f"Affine ratio must satisfy 0 < |s| < 1, got {self.ratio}")

    def value(self, y: np.ndarray) -> np.ndarray:
        y = np.asarray(y, dtype=np.longdouble)
        return np.longdouble(self.offset) + np.longdouble(self.ratio) * y

    def derivative(self, y: np.ndarray) -> np.ndarray:
        return np.full(np.shape(y), self.ratio, dtype=np.longdouble)


@dataclass(frozen=True)
class LogisticBranch(BranchMap):
    """
    Inverse branches of f(x) = mu x (1 - x):
    phi_{1,2}(y) = (mu -/+ sqrt(mu^2 - 4 mu y)) / (2 mu)
    """

    index: int
    mu: float = 5.0
    kind = 'logistic'

    def __post_init__(self):
        if self.index not in (1, 2):
            raise ValidationError(f"Logistic branch index must be 1 or 2, got {self.index}")
        if self.mu <= 4:
            raise ValidationError(f"Logistic parameter must exceed 4 for a cookie-cutter, got {self.mu}")

    @property
    def _sign(self) -> int:
        return -1 if self.index == 1 else 1

    def _root(self, y: np.ndarray) -> np.ndarray:
        mu = np.longdouble(self.mu)
        return np.sqrt(np.maximum(mu * mu - 4 * mu * np.asarray(y, dtype=np.longdouble), 0))

    def value(self, y: np.ndarray) -> np.ndarray:
        mu = np.longdouble(self.mu)
        return (mu + self._sign * self._root(y)) / (2 * mu)

    def derivative(self, y: np.ndarray) -> np.ndarray:
        return -self._sign / self._root(y)


@dataclass(frozen=True)
class CookieCutterSystem:
    """
    N branch inverses with defining data [c, gamma, b, B]
    Immutable and hashable, so geometry tables can be cached per system.
    """

    name: str
    branches: Tuple[BranchMap, ...]
    c: float
    gamma: float
    b: float
    B: float
    kind: str = 'affine'

    def __post_init__(self):
        if len(self.branches) < 2:
            raise ValidationError(f"System '{self.name}' needs at least 2 branches, got {len(self.branches)}")
        if not 1 < self.b <= self.B < math.inf:
            raise ValidationError(f"Expansion bounds must satisfy 1 < b <= B < inf, got b={self.b}, B={self.B}")
        images = sorted(branch.image() for branch in self.branches)
        for (left_a, right_a), (left_b, right_b) in zip(images, images[1:]):
            if right_a >= left_b:
                raise ValidationError(
                    f"Branch images of '{self.name}' overlap: [{left_a}, {right_a}] and [{left_b}, {right_b}]"
                )
        if images[0][0] < 0 or images[-1][1] > 1:
            raise ValidationError(f"Branch images of '{self.name}' leave [0, 1]")

    @property
    def n_branches(self) -> int:
        return len(self.branches)

    @property
    def is_affine(self) -> bool:
        return all(isinstance(branch, AffineBranch) for branch in self.branches)

    @property
    def xi(self) -> float:
        return distortion_from_defining_data(self.c, self.gamma, self.b)

    @property
    def ratios(self) -> Tuple[float, ...]:
        if not self.is_affine:
            raise ValidationError(f"System '{self.name}' is not affine")
        return tuple(abs(branch.ratio) for branch in self.branches)

    def describe(self) -> Dict[str, Any]:
        return {
            'name': self.name,
            'kind': self.kind,
            'n_branches': self.n_branches,
            'c': self.c,
            'gamma': self.gamma,
            'b': self.b,
            'B': self.B,
            'xi': self.xi,
        }


@dataclass(frozen=True, eq=False)
class CylinderAtlas:
    """
    All level-k cylinders in lexicographic word order

    supderiv_lo / supderiv_hi bracket ||phi'_sigma|| and are None when the
    atlas was built without derivative grids.
    """

    level: int
    n_branches: int
    left: np.ndarray
    right: np.ndarray
    diam: np.ndarray
    supderiv_lo: Optional[np.ndarray] = None
    supderiv_hi: Optional[np.ndarray] = None
    grid_points: int = 0
    _log_diam: Dict[str, np.ndarray] = field(default_factory=dict, repr=False)

    def __len__(self) -> int:
        return len(self.diam)

    @property
    def has_derivatives(self) -> bool:
        return self.supderiv_lo is not None

    @property
    def log_diam(self) -> np.ndarray:
        if 'diam' not in self._log_diam:
            self._log_diam['diam'] = np.log(self.diam)
        return self._log_diam['diam']

    @property
    def supderiv_mid(self) -> np.ndarray:
        """
        Point estimate of ||phi'_sigma||: the grid maximum. hi is a worst-case
        cap (often b^-k), so the arithmetic centre of the bracket is biased.
        """
        self._require_derivatives()
        return self.supderiv_lo

    @property
    def log_supderiv_mid(self) -> np.ndarray:
        if 'mid' not in self._log_diam:
            self._log_diam['mid'] = np.log(self.supderiv_mid)
        return self._log_diam['mid']

    @property
    def supderiv_log_radius(self) -> float:
        """max over words of log(hi/mid) and log(mid/lo)"""
        self._require_derivatives()
        mid = self.supderiv_mid
        return float(max(np.max(np.log(self.supderiv_hi / mid)), np.max(np.log(mid / self.supderiv_lo))))

    def word(self, position: int) -> Word:
        return Word.from_index(position, self.level, self.n_branches)

    def index(self, word: Word) -> int:
        if len(word) != self.level:
            raise ValidationError(f"Word {word} is not on level {self.level}")
        return word.validate(self.n_branches).index(self.n_branches)

    def words(self) -> List[Word]:
        return [self.word(i) for i in range(len(self))]

    def _require_derivatives(self) -> None:
        if not self.has_derivatives:
            raise ValidationError(f"Atlas at level {self.level} was built without derivative brackets")

    def to_frame(self) -> pd.DataFrame:
        frame = pd.DataFrame({
            'word': [str(w) for w in self.words()],
            'left': self.left,
            'right': self.right,
            'diam': self.diam,
        })
        if self.has_derivatives:
            frame['supderiv_lo'] = self.supderiv_lo
            frame['supderiv_hi'] = self.supderiv_hi
        return frame
