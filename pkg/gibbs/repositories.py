"""
Weight Repository - write-once store of cylinder weights keyed by word
"""
from typing import Iterable

from core.base.repository import BulkRepository
from words.models import Word

from .models import CylinderWeight, LevelWeights


class WeightRepository(BulkRepository[Word, CylinderWeight]):
    """
    Filled level by level while a surrogate is built, read-only afterwards
    """

    def store_level(self, words: Iterable[Word], weights: LevelWeights) -> int:
        records = {
            word: CylinderWeight(word=word, lo=float(lo), mid=float(mid), hi=float(hi))
            for word, lo, mid, hi in zip(words, weights.lo, weights.mid, weights.hi)
        }
        return self.bulk_create(records)
