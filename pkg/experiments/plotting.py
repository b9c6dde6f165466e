"""
SVG line plots for temperature curves and error curves

Default matplotlib style on the Agg backend; the SVG hash salt and the
date metadata are pinned so identical data gives identical files.
"""
import logging
from pathlib import Path
from typing import Sequence

import matplotlib

matplotlib.use('Agg')

import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

from pressure.models import PressureCurve  # noqa: E402
from quantizer.models import ErrorCurve  # noqa: E402

logger = logging.getLogger(__name__)

SVG_SALT = 'quantdim'


def _save(fig, path: Path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with matplotlib.rc_context({'svg.hashsalt': SVG_SALT}):
        fig.savefig(path, format='svg', metadata={'Date': None})
    plt.close(fig)
    logger.info(f"Wrote plot {path}")
    return path


def plot_temperature_curve(curve: PressureCurve, path: Path, r_values: Sequence[float] = ()) -> Path:
    """beta(q) with its bracket and the lines y = r q"""
    q = curve.q
    fig, ax = plt.subplots(figsize=(6, 4))
    ax.plot(q, curve.beta_mid, label='beta(q)')
    ax.fill_between(q, curve.beta_lo, curve.beta_hi, alpha=0.3)
    for r in r_values:
        ax.plot(q, r * q, linestyle='--', label=f"y = {r:g} q")
    for row in curve.figure1:
        ax.plot([row.q_r], [row.beta_at_qr], marker='o', color='black')
    ax.set_xlabel('q')
    ax.set_ylabel('beta')
    ax.legend()
    return _save(fig, path)


def plot_error_curves(curves: Sequence[ErrorCurve], path: Path) -> Path:
    """log-log e_{n,r} against n, one line per r; V = 0 points are left out"""
    fig, ax = plt.subplots(figsize=(6, 4))
    for curve in curves:
        keep = curve.V > 0
        ax.loglog(np.asarray(curve.n_values)[keep], curve.e[keep], marker='.', label=f"r = {curve.r:g}")
    ax.set_xlabel('n')
    ax.set_ylabel('e_{n,r}')
    ax.legend()
    return _save(fig, path)
