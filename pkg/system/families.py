"""
Shipped cookie-cutter families and construction from config definitions
"""
import math
from typing import Any, Dict, Optional, Sequence

from core.exceptions import ValidationError

from .models import AffineBranch, CookieCutterSystem, LogisticBranch

# declared defining data of the f(x) = 5x(1 - x) cookie-cutter
LOGISTIC_DEFINING_DATA = {'c': 10.0, 'gamma': 1.0, 'b': math.sqrt(5.0), 'B': 5.0}


def affine_system(
    ratios: Sequence[float],
    offsets: Sequence[float],
    name: str = 'affine',
    c: float = 0.0,
    gamma: float = 1.0,
) -> CookieCutterSystem:
    """Affine branches phi_j(y) = offset_j + s_j y; b, B follow from the ratios"""
    if len(ratios) != len(offsets):
        raise ValidationError(f"Got {len(ratios)} ratios but {len(offsets)} offsets")
    branches = tuple(AffineBranch(ratio=float(s), offset=float(o)) for s, o in zip(ratios, offsets))
    magnitudes = [abs(branch.ratio) for branch in branches]
    return CookieCutterSystem(
        name=name,
        branches=branches,
        c=c,
        gamma=gamma,
        b=1.0 / max(magnitudes),
        B=1.0 / min(magnitudes),
        kind='affine',
    )


def middle_third_cantor() -> CookieCutterSystem:
    return affine_system([1 / 3, 1 / 3], [0.0, 2 / 3], name='cantor')


def golden_system() -> CookieCutterSystem:
    """Ratios (1/2, 1/4); h = log((1 + sqrt 5)/2) / log 2"""
    return affine_system([1 / 2, 1 / 4], [0.0, 3 / 4], name='golden')


def logistic_system() -> CookieCutterSystem:
    return CookieCutterSystem(
        name='logistic',
        branches=(LogisticBranch(index=1), LogisticBranch(index=2)),
        kind='logistic',
        **LOGISTIC_DEFINING_DATA,
    )


SHIPPED_SYSTEMS = {
    'cantor': middle_third_cantor,
    'golden': golden_system,
    'logistic': logistic_system,
}


def system_from_definition(definition: Dict[str, Any], name: Optional[str] = None) -> CookieCutterSystem:
    """
    Build a system from a config mapping:
    {"kind": "affine", "ratios": [...], "offsets": [...], "c": 0, "gamma": 1}
    or {"kind": "logistic"}
    """
    kind = definition.get('kind')
    name = name or definition.get('name') or kind

    if kind == 'affine':
        ratios = definition.get('ratios')
        offsets = definition.get('offsets')
        if not ratios or offsets is None:
            raise ValidationError('Affine systems need "ratios" and "offsets"')
        return affine_system(
            ratios,
            offsets,
            name=name,
            c=definition.get('c', 0.0),
            gamma=definition.get('gamma', 1.0),
        )

    if kind == 'logistic':
        system = logistic_system()
        if name != system.name:
            system = CookieCutterSystem(
                name=name,
                branches=system.branches,
                kind='logistic',
                **LOGISTIC_DEFINING_DATA,
            )
        return system

    raise ValidationError(f"Unknown system kind '{kind}', expected 'affine' or 'logistic'")
