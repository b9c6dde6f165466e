"""
Convergence diagnostics for (1/k) log S_k
"""
from typing import Optional, Sequence

import numpy as np


def aitken_delta_squared(values: Sequence[float]) -> Optional[float]:
    """
    Aitken extrapolation from the last three terms of a sequence

    Returns the last term when the second difference vanishes and None when
    fewer than three terms are available.
    """
    if len(values) < 3:
        return None
    x0, x1, x2 = (float(v) for v in values[-3:])
    second_difference = x2 - 2.0 * x1 + x0
    if abs(second_difference) <= 1e-15 * max(1.0, abs(x2)):
        return x2
    return x2 - (x2 - x1) ** 2 / second_difference


def level_rates(log_sums: Sequence[float], levels: Sequence[int]) -> np.ndarray:
    """(1/k) log S_k for each level"""
    return np.asarray(log_sums, dtype=float) / np.asarray(levels, dtype=float)
