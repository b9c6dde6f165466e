"""
Symbolic words and finite maximal antichains
"""
from dataclasses import dataclass, field
from typing import Iterable, Iterator, Tuple

from core.exceptions import ValidationError

EMPTY_WORD_TOKEN = '-'


@dataclass(frozen=True, order=True)
class Word:
    """
    Finite symbol string over {1..N}; addresses the cylinder J_sigma

    Ordering is lexicographic with a prefix sorting before its extensions.
    """

    symbols: Tuple[int, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, 'symbols', tuple(int(s) for s in self.symbols))

    @classmethod
    def parse(cls, text: str) -> 'Word':
        """Parse "2.1.1" (or "-" for the empty word)"""
        text = text.strip()
        if text in (EMPTY_WORD_TOKEN, ''):
            return cls(())
        try:
            return cls(tuple(int(part) for part in text.split('.')))
        except ValueError as exc:
            raise ValidationError(f"Malformed word '{text}'") from exc

    def __len__(self) -> int:
        return len(self.symbols)

    def __iter__(self) -> Iterator[int]:
        return iter(self.symbols)

    def __str__(self) -> str:
        if not self.symbols:
            return EMPTY_WORD_TOKEN
        return '.'.join(str(s) for s in self.symbols)

    def __add__(self, other: 'Word') -> 'Word':
        return self.concat(other)

    @property
    def is_empty(self) -> bool:
        return not self.symbols

    def concat(self, other: 'Word') -> 'Word':
        return Word(self.symbols + other.symbols)

    def append(self, symbol: int) -> 'Word':
        return Word(self.symbols + (symbol,))

    def truncate(self, k: int) -> 'Word':
        """sigma|_k"""
        if k < 0 or k > len(self):
            raise ValidationError(f"Cannot truncate word of length {len(self)} to {k}")
        return Word(self.symbols[:k])

    @property
    def parent(self) -> 'Word':
        """sigma minus its last symbol"""
        if self.is_empty:
            raise ValidationError('The empty word has no parent')
        return Word(self.symbols[:-1])

    def suffix(self, k: int) -> 'Word':
        """Word with the first k symbols removed"""
        return Word(self.symbols[k:])

    def is_prefix_of(self, other: 'Word') -> bool:
        """self precedes other in the extension order (self is a prefix of other)"""
        return len(self) <= len(other) and other.symbols[:len(self)] == self.symbols

    def validate(self, n_branches: int) -> 'Word':
        for s in self.symbols:
            if not 1 <= s <= n_branches:
                raise ValidationError(
                    f"Symbol {s} in word {self} is outside [1, {n_branches}]",
                    {'word': str(self), 'symbol': s},
                )
        return self

    def index(self, n_branches: int) -> int:
        """Position of the word among the lexicographically ordered level-|sigma| words"""
        position = 0
        for s in self.symbols:
            position = position * n_branches + (s - 1)
        return position

    @classmethod
    def from_index(cls, position: int, length: int, n_branches: int) -> 'Word':
        symbols = []
        for _ in range(length):
            position, digit = divmod(position, n_branches)
            symbols.append(digit + 1)
        return cls(tuple(reversed(symbols)))


EMPTY_WORD = Word(())


@dataclass(frozen=True)
class Antichain:
    """
    Finite set of nonempty words, stored in lexicographic order
    Validity (prefix-freeness, maximality) is checked by WordService, not here.
    """

    words: Tuple[Word, ...] = field(default_factory=tuple)

    def __post_init__(self):
        object.__setattr__(self, 'words', tuple(sorted(set(self.words))))

    @classmethod
    def of(cls, words: Iterable[Word]) -> 'Antichain':
        return cls(tuple(words))

    def __len__(self) -> int:
        return len(self.words)

    def __iter__(self) -> Iterator[Word]:
        return iter(self.words)

    def __contains__(self, word: Word) -> bool:
        return word in self.words

    @property
    def max_length(self) -> int:
        return max((len(w) for w in self.words), default=0)

    def prefix_of(self, word: Word) -> Word:
        """The unique antichain word that is a prefix of word"""
        for candidate in self.words:
            if candidate.is_prefix_of(word):
                return candidate
        raise ValidationError(f"No antichain word is a prefix of {word}")

    def __str__(self) -> str:
        return '{' + ', '.join(str(w) for w in self.words) + '}'


@dataclass(frozen=True)
class AntichainValidity:
    """Result of validate_antichain"""

    prefix_free: bool
    maximal: bool
    contains_empty: bool
    prefix_witness: str = ''
    coverage: int = 0
    expected_coverage: int = 0

    @property
    def valid(self) -> bool:
        return self.prefix_free and self.maximal and not self.contains_empty
