"""Power-law exponent estimation from norm time series."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.stats

from .errors import NonPositiveValue, TooFewPoints


@dataclass
class FitResult:
    exponent: float
    intercept: float
    stderr: float
    window: tuple[float, float]
    n_points: int


def fit_power_law(times, values, window: tuple[float, float]) -> FitResult:
    """Ordinary least squares on (log t, log value) inside the window.

    stderr is the slope standard error from the residual variance. (1+t)-type
    laws should be fitted on windows with t_lo >= 10, where the offset biases
    the exponent by less than ~0.03.
    """
    times = np.asarray(times, dtype=float)
    values = np.asarray(values, dtype=float)
    lo, hi = window
    sel = (times >= lo) & (times <= hi)
    t, v = times[sel], values[sel]
    if t.size < 5:
        raise TooFewPoints(f"only {t.size} points in window [{lo:g}, {hi:g}]")
    if np.any(v <= 0):
        raise NonPositiveValue("values must be strictly positive inside the window")
    res = scipy.stats.linregress(np.log(t), np.log(v))
    return FitResult(
        exponent=float(res.slope),
        intercept=float(res.intercept),
        stderr=float(res.stderr),
        window=(float(lo), float(hi)),
        n_points=int(t.size),
    )
