"""
Dynamic programming over contiguous clusters
"""
from typing import List, Tuple

import numpy as np

from .costs import ClusterCostTable


class PartitionTable:
    """
    best[c, j]: least cost of splitting atoms 0..j into c clusters.
    split[c, j] holds the first atom of the last cluster; argmin picks the
    smallest split index on ties.
    """

    def __init__(self, table: ClusterCostTable, n_max: int):
        self.table = table
        m = len(table)
        self.atom_count = m
        self.n_max = min(n_max, m)

        cost = table.cost
        self.best = np.full((self.n_max + 1, m), np.inf)
        self.split = np.zeros((self.n_max + 1, m), dtype=int)
        self.best[1] = cost[0]
        for c in range(2, self.n_max + 1):
            # candidate[i - 1, j] = best[c - 1, i - 1] + cost[i, j]
            candidate = self.best[c - 1, :-1, np.newaxis] + cost[1:, :]
            position = np.argmin(candidate, axis=0)
            self.best[c] = candidate[position, np.arange(m)]
            self.split[c] = position + 1

    def value(self, n: int) -> float:
        if n >= self.atom_count:
            return 0.0
        return float(self.best[n, self.atom_count - 1])

    def clusters(self, n: int) -> List[Tuple[int, int]]:
        """Inclusive (start, stop) pairs in atom order"""
        if n >= self.atom_count:
            return [(i, i) for i in range(self.atom_count)]
        runs = []
        stop = self.atom_count - 1
        for c in range(n, 1, -1):
            start = int(self.split[c, stop])
            runs.append((start, stop))
            stop = start - 1
        runs.append((0, stop))
        return runs[::-1]
