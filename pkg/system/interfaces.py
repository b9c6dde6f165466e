"""
System Interfaces - cylinder geometry contracts
"""
from abc import ABC, abstractmethod
from typing import Optional, Tuple

from core.reports import VerificationReport
from words.models import Word

from .models import CookieCutterSystem, CylinderAtlas


class IGeometryService(ABC):
    """
    Interface for cylinder geometry of a cookie-cutter system
    """

    @abstractmethod
    def cylinder_interval(self, system: CookieCutterSystem, word: Word) -> Tuple[float, float]:
        """J_sigma as a sorted pair of endpoints"""
        pass

    @abstractmethod
    def sup_derivative(
        self, system: CookieCutterSystem, word: Word, grid_points: Optional[int] = None
    ) -> Tuple[float, float]:
        """Bracket [lo, hi] for ||phi'_sigma||"""
        pass

    @abstractmethod
    def distortion_constant(self, system: CookieCutterSystem) -> float:
        """xi from the defining data"""
        pass

    @abstractmethod
    def build_atlas(
        self, system: CookieCutterSystem, level: int, with_derivatives: bool = False,
        grid_points: Optional[int] = None,
    ) -> CylinderAtlas:
        """All level-k cylinders"""
        pass

    @abstractmethod
    def verify_defining_data(
        self, system: CookieCutterSystem, depth: int, grid_points: Optional[int] = None
    ) -> VerificationReport:
        """Sweep the distortion inequalities up to depth"""
        pass
