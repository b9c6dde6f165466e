"""
Word Interfaces
"""
from abc import ABC, abstractmethod
from typing import Any, List

from .models import Antichain, AntichainValidity, Word


class IWordService(ABC):
    """
    Interface for word enumeration and antichain construction
    """

    @abstractmethod
    def enumerate_words(self, n_branches: int, level: int) -> List[Word]:
        """All words of the given length in lexicographic order"""
        pass

    @abstractmethod
    def antichain_by_diameter(self, system: Any, epsilon: float) -> Antichain:
        """Stopping-rule antichain {sigma : |J_sigma| <= eps < |J_parent|}"""
        pass

    @abstractmethod
    def validate_antichain(self, antichain: Antichain, n_branches: int) -> AntichainValidity:
        """Report prefix-freeness and maximality separately"""
        pass
