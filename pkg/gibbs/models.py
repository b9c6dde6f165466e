"""
Gibbs surrogate and discrete measure models
"""
from dataclasses import dataclass, field
from typing import Optional, Tuple

import numpy as np
import pandas as pd

from core.exceptions import ValidationError
from pressure.models import RootEnclosure
from system.models import CookieCutterSystem
from words.models import Word


@dataclass(frozen=True)
class CylinderWeight:
    """(w_lo, w_mid, w_hi) for one cylinder"""

    word: Word
    lo: float
    mid: float
    hi: float

    def to_dict(self) -> dict:
        return {'word': str(self.word), 'w_lo': self.lo, 'w_mid': self.mid, 'w_hi': self.hi}


@dataclass(frozen=True, eq=False)
class LevelWeights:
    """
    Weights of all level-k words in lexicographic order

    spread holds max - min of nu_n over the averaging window (zero for the
    closed-form affine weights).
    """

    level: int
    lo: np.ndarray
    mid: np.ndarray
    hi: np.ndarray
    spread: Optional[np.ndarray] = None

    def __len__(self) -> int:
        return len(self.mid)


@dataclass(eq=False)
class GibbsSurrogate:
    """
    Finite-level stand-in for mu_h

    eta = xi^(9h) and L = eta^3 xi^(3h) are evaluated at the upper end of
    the h enclosure; weight formulas use the point estimate when it lies
    inside the enclosure and the midpoint otherwise.
    """

    system: CookieCutterSystem
    h: RootEnclosure
    window: Tuple[int, int]
    depth: int
    eta: float
    L: float
    levels: Tuple[LevelWeights, ...] = field(default_factory=tuple)
    weights: Optional[object] = field(default=None, repr=False)

    @property
    def h_value(self) -> float:
        return self.h.point

    @property
    def exact(self) -> bool:
        return self.system.is_affine

    def level_weights(self, level: int) -> LevelWeights:
        if not 0 <= level <= self.depth:
            raise ValidationError(
                f"Surrogate for {self.system.name} holds levels 0..{self.depth}, got {level}",
                {'level': level, 'depth': self.depth},
            )
        return self.levels[level]

    def weight(self, word: Word) -> CylinderWeight:
        record = self.weights.get_by_id(word) if self.weights is not None else None
        if record is None:
            raise ValidationError(f"No cached weight for word {word} (depth {self.depth})")
        return record


@dataclass(frozen=True, eq=False)
class DiscreteMeasure1D:
    """Atoms in increasing order with positive weights summing to 1"""

    atoms: np.ndarray
    weights: np.ndarray
    level: int = 0
    atom_rule: str = 'midpoint'
    radius: float = 0.0

    def __post_init__(self):
        atoms = np.asarray(self.atoms, dtype=float)
        weights = np.asarray(self.weights, dtype=float)
        if atoms.ndim != 1 or atoms.shape != weights.shape:
            raise ValidationError(f"Atoms and weights must be 1-D of equal length, got {atoms.shape} and {weights.shape}")
        if len(atoms) == 0:
            raise ValidationError('A discrete measure needs at least one atom')
        if np.any(np.diff(atoms) <= 0):
            raise ValidationError('Atoms must be strictly increasing')
        if np.any(weights <= 0):
            raise ValidationError('Weights must be positive')
        if abs(weights.sum() - 1.0) > 1e-12:
            raise ValidationError(f"Weights must sum to 1, got {weights.sum():.17g}")
        object.__setattr__(self, 'atoms', atoms)
        object.__setattr__(self, 'weights', weights)

    @classmethod
    def normalized(cls, atoms, weights, **kwargs) -> 'DiscreteMeasure1D':
        """Sort atoms and rescale weights to total mass 1"""
        atoms = np.asarray(atoms, dtype=float)
        weights = np.asarray(weights, dtype=float)
        order = np.argsort(atoms, kind='stable')
        weights = weights[order]
        return cls(atoms=atoms[order], weights=weights / weights.sum(), **kwargs)

    def __len__(self) -> int:
        return len(self.atoms)

    def translated(self, shift: float) -> 'DiscreteMeasure1D':
        return DiscreteMeasure1D(self.atoms + shift, self.weights, self.level, self.atom_rule, self.radius)

    def scaled(self, factor: float) -> 'DiscreteMeasure1D':
        if factor <= 0:
            raise ValidationError(f"Scale factor must be positive, got {factor}")
        return DiscreteMeasure1D(self.atoms * factor, self.weights, self.level, self.atom_rule, self.radius * factor)

    def to_frame(self) -> pd.DataFrame:
        return pd.DataFrame({'position': self.atoms, 'weight': self.weights})
