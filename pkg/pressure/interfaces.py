"""
Pressure Interfaces - pressure sums and the roots derived from them
"""
from abc import ABC, abstractmethod
from typing import Any, Optional, Sequence

import pandas as pd

from system.models import CookieCutterSystem, CylinderAtlas

from .models import KappaResult, PressureBracket, PressureCurve, RootEnclosure


class IPressureService(ABC):
    """
    Interface for finite-level pressure brackets and certified roots
    """

    @abstractmethod
    def partition_sum(self, atlas: CylinderAtlas, t: float) -> float:
        """S_k(t) = sum |J_sigma|^t"""
        pass

    @abstractmethod
    def pressure_Q(self, system: CookieCutterSystem, t: float, k_max: Optional[int] = None) -> PressureBracket:
        """Bracket for Q(t)"""
        pass

    @abstractmethod
    def hausdorff_dimension(
        self, system: CookieCutterSystem, k_max: Optional[int] = None, tol: Optional[float] = None
    ) -> RootEnclosure:
        """Enclosure of the zero of Q"""
        pass

    @abstractmethod
    def mixed_sum(self, atlas: CylinderAtlas, weights: Any, q: float, t: float) -> float:
        """Z_k(q, t)"""
        pass

    @abstractmethod
    def pressure_P(
        self, system: CookieCutterSystem, measure: Any, q: float, t: float, k_max: Optional[int] = None
    ) -> PressureBracket:
        """Bracket for P(q, t)"""
        pass

    @abstractmethod
    def beta(
        self, system: CookieCutterSystem, measure: Any, q: float,
        k_max: Optional[int] = None, tol: Optional[float] = None,
    ) -> RootEnclosure:
        """Enclosure of beta(q)"""
        pass

    @abstractmethod
    def kappa(
        self, system: CookieCutterSystem, measure: Any, r: float,
        k_max: Optional[int] = None, tol: Optional[float] = None,
    ) -> KappaResult:
        """q_r and kappa_r"""
        pass

    @abstractmethod
    def temperature_curve(
        self, system: CookieCutterSystem, measure: Any, q_grid: Sequence[float],
        k_max: Optional[int] = None, tol: Optional[float] = None, r_values: Sequence[float] = (),
    ) -> PressureCurve:
        """Sampled beta(q) plus the r q intersection rows"""
        pass

    @abstractmethod
    def legendre_spectrum(self, curve: PressureCurve) -> pd.DataFrame:
        """(alpha, f(alpha)) samples"""
        pass
