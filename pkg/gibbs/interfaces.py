"""
Gibbs Interfaces - surrogate construction and measure discretization contracts
"""
from abc import ABC, abstractmethod
from typing import Optional, Tuple

from core.reports import VerificationReport
from pressure.models import RootEnclosure
from system.models import CookieCutterSystem
from words.models import Word

from .models import CylinderWeight, DiscreteMeasure1D, GibbsSurrogate


class IGibbsService(ABC):
    """
    Interface for the finite-level stand-in of mu_h
    """

    @abstractmethod
    def nu_n(self, system: CookieCutterSystem, word: Word, n: int, h: float) -> float:
        """Share of the level-(|sigma| + n) partition sum carried by descendants of sigma"""
        pass

    @abstractmethod
    def build_surrogate(
        self, system: CookieCutterSystem, h: Optional[RootEnclosure] = None,
        window: Optional[Tuple[int, int]] = None, depth: Optional[int] = None,
    ) -> GibbsSurrogate:
        """Cache weights for every word up to depth"""
        pass

    @abstractmethod
    def measure_weight(self, surrogate: GibbsSurrogate, word: Word) -> CylinderWeight:
        """(w_lo, w_mid, w_hi) for one cylinder"""
        pass

    @abstractmethod
    def discrete_measure(self, surrogate: GibbsSurrogate, level: int, atom_rule: str = 'midpoint') -> DiscreteMeasure1D:
        """One atom per level-k cylinder"""
        pass

    @abstractmethod
    def gibbs_bracket_check(self, surrogate: GibbsSurrogate, depth: Optional[int] = None) -> VerificationReport:
        """eta-bracket and L-quasi-multiplicativity sweep"""
        pass
