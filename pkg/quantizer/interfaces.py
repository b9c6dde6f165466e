"""
Quantizer Interfaces - optimal quantization contracts
"""
from abc import ABC, abstractmethod
from typing import Optional, Sequence, Tuple

from core.reports import VerificationReport
from gibbs.models import DiscreteMeasure1D, GibbsSurrogate
from words.models import Antichain

from .models import CoefficientBand, DrEstimate, ErrorCurve, QuantizerResult


class IQuantizerService(ABC):
    """
    Interface for exact 1-D quantization of discrete measures
    """

    @abstractmethod
    def cluster_cost(self, atoms, weights, start: int, stop: int, r: float) -> Tuple[float, float]:
        """(center, cost) of one contiguous cluster"""
        pass

    @abstractmethod
    def optimal_quantizer(self, measure: DiscreteMeasure1D, n: int, r: float) -> QuantizerResult:
        """Exact optimal n-center set"""
        pass

    @abstractmethod
    def constrained_error(
        self, measure: DiscreteMeasure1D, n: int, r: float, boundary: Tuple[float, float] = (0.0, 1.0)
    ) -> float:
        """u_{n,r} with distances capped by the distance to the complement of the boundary interval"""
        pass

    @abstractmethod
    def error_curve(self, measure: DiscreteMeasure1D, r: float, n_values: Sequence[int]) -> ErrorCurve:
        """V_{n,r} for every n in an ascending grid"""
        pass

    @abstractmethod
    def estimate_Dr(self, curve: ErrorCurve, fit_range: Optional[Tuple[int, int]] = None) -> DrEstimate:
        """Regression estimate of the quantization dimension"""
        pass

    @abstractmethod
    def coefficient_band(
        self, curve: ErrorCurve, kappa: float, fit_range: Optional[Tuple[int, int]] = None
    ) -> CoefficientBand:
        """min and max of n V^(kappa/r) over the fit range"""
        pass

    @abstractmethod
    def antichain_bound_check(
        self, surrogate: GibbsSurrogate, antichain: Antichain, n: int, r: float, kappa: float,
        level: Optional[int] = None,
    ) -> VerificationReport:
        """Antichain sum, upper recursion and lower recursion inequalities"""
        pass
