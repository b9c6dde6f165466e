"""
Test factories for small random discrete measures

Seed with factory.random.reseed_random(...) for reproducible batches.
"""
import factory
import numpy as np
from factory.random import randgen

from gibbs.models import DiscreteMeasure1D

MAX_ATOMS = 12


def _random_atoms(size: int) -> np.ndarray:
    """Distinct positions on the 1/1000 grid of [0, 1)"""
    return np.array(sorted(randgen.sample(range(1000), size))) / 1000.0


def _random_weights(size: int) -> np.ndarray:
    raw = np.array([randgen.uniform(0.05, 1.0) for _ in range(size)])
    return raw / raw.sum()


class DiscreteMeasureFactory(factory.Factory):
    class Meta:
        model = DiscreteMeasure1D

    class Params:
        size = factory.LazyFunction(lambda: randgen.randint(1, MAX_ATOMS))

    atoms = factory.LazyAttribute(lambda o: _random_atoms(o.size))
    weights = factory.LazyAttribute(lambda o: _random_weights(o.size))
