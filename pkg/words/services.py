"""
Word Services - symbolic addressing of cylinders
"""
import itertools
import logging
from typing import Any, List, Optional

from core.exceptions import EnumerationCapError, ValidationError
from quantdim import settings

from .interfaces import IWordService
from .models import EMPTY_WORD, Antichain, AntichainValidity, Word

logger = logging.getLogger(__name__)


def check_level_cap(n_branches: int, level: int, cap: Optional[int] = None) -> int:
    """Return N^k, raising when it exceeds the enumeration cap"""
    cap = settings.ENUMERATION_CAP if cap is None else cap
    count = n_branches ** level
    if count > cap:
        raise EnumerationCapError(
            f"Level {level} has {count} words for N={n_branches}, cap is {cap}",
            {'n_branches': n_branches, 'level': level, 'cap': cap},
        )
    return count


class WordService(IWordService):
    """
    Word enumeration and antichain construction
    Single Responsibility: combinatorics only, geometry is injected
    """

    def __init__(self, geometry: Any = None, cap: Optional[int] = None, max_word_length: Optional[int] = None):
        self._geometry = geometry
        self.cap = settings.ENUMERATION_CAP if cap is None else cap
        self.max_word_length = settings.MAX_WORD_LENGTH if max_word_length is None else max_word_length

    @property
    def geometry(self):
        if self._geometry is None:
            from system.services import GeometryService
            self._geometry = GeometryService()
        return self._geometry

    def enumerate_words(self, n_branches: int, level: int) -> List[Word]:
        """All N^k words of length k, lexicographic; level 0 gives [empty word]"""
        if n_branches < 2:
            raise ValidationError(f"A cookie-cutter system needs at least 2 branches, got {n_branches}")
        if level < 0:
            raise ValidationError(f"Level must be non-negative, got {level}")
        check_level_cap(n_branches, level, self.cap)

        return [Word(symbols) for symbols in itertools.product(range(1, n_branches + 1), repeat=level)]

    def antichain_by_diameter(self, system: Any, epsilon: float) -> Antichain:
        """
        Gamma_eps = {sigma : |J_sigma| <= eps < |J_parent(sigma)|}

        Depth-first in lexicographic order; diameters are compared with a
        relative tolerance so that exact affine levels (eps = 3^-k) are
        not split by rounding.
        """
        if not 0 < epsilon < 1:
            raise ValidationError(f"epsilon must lie in (0, 1), got {epsilon}")

        threshold = epsilon * (1.0 + settings.CHECK_RTOL)
        words: List[Word] = []
        stack = [EMPTY_WORD.append(j) for j in range(system.n_branches, 0, -1)]

        while stack:
            word = stack.pop()
            if len(word) > self.max_word_length:
                raise EnumerationCapError(
                    f"Word length cap {self.max_word_length} exceeded for epsilon={epsilon}",
                    {'epsilon': epsilon, 'word': str(word)},
                )
            if self.geometry.cylinder_diameter(system, word) <= threshold:
                words.append(word)
            else:
                stack.extend(word.append(j) for j in range(system.n_branches, 0, -1))

            if len(words) > self.cap:
                raise EnumerationCapError(f"Antichain for epsilon={epsilon} exceeds {self.cap} words")

        antichain = Antichain.of(words)
        logger.debug(f"Antichain for eps={epsilon}: {len(antichain)} words, max length {antichain.max_length}")
        return antichain

    def level_antichain(self, n_branches: int, level: int) -> Antichain:
        """All words of one length form a maximal antichain"""
        if level < 1:
            raise ValidationError('A maximal antichain cannot contain the empty word')
        return Antichain.of(self.enumerate_words(n_branches, level))

    def validate_antichain(self, antichain: Antichain, n_branches: int) -> AntichainValidity:
        """
        Prefix-freeness by comparing lexicographic neighbours, maximality
        through the counting identity sum N^(M - |sigma|) = N^M.
        """
        words = list(antichain)
        contains_empty = any(word.is_empty for word in words)

        prefix_free = True
        witness = ''
        # in lexicographic order a prefix sits immediately before one of its extensions
        for previous, current in zip(words, words[1:]):
            if previous.is_prefix_of(current):
                prefix_free = False
                witness = f"{previous} < {current}"
                break

        max_length = antichain.max_length
        coverage = sum(n_branches ** (max_length - len(word)) for word in words)
        expected = n_branches ** max_length
        maximal = prefix_free and coverage == expected

        return AntichainValidity(
            prefix_free=prefix_free,
            maximal=maximal,
            contains_empty=contains_empty,
            prefix_witness=witness,
            coverage=coverage,
            expected_coverage=expected,
        )
