"""
Service Layer Interfaces
Services contain the numerics, repositories and caches hold computed state
"""
from abc import ABC, abstractmethod
from typing import Any, Optional

from core.reports import VerificationReport


class ICheckService(ABC):
    """
    Services that can audit their own results against proven inequalities
    """

    @abstractmethod
    def run_checks(self, *args: Any, **kwargs: Any) -> VerificationReport:
        """Run the service's check suite and return the report"""
        pass


class ICacheService(ABC):
    """
    Cache service interface - Dependency Inversion
    Geometry and pressure services depend on this, not on a dict
    """

    @abstractmethod
    def get(self, key: Any) -> Optional[Any]:
        """Get value from cache"""
        pass

    @abstractmethod
    def set(self, key: Any, value: Any) -> bool:
        """Store value under key"""
        pass
