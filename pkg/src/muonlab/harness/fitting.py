"""Least-squares fit of the steps-vs-batch model X/T + Y/b = epsilon."""

import math

import numpy as np

from ..exceptions import FitError
from ..theory import ComplexityModel


def fit_complexity_arrays(batches, steps, epsilon) -> ComplexityModel:
    """Fit (X, Y) from measured step counts T-hat(b).

    Solving X/T + Y/b = epsilon for 1/T gives ``1/T = epsilon/X - (Y/X) / b``,
    a straight line in 1/b. Two points are interpolated exactly; with more the
    line is an ordinary least-squares fit and ``r_squared`` reports its quality.
    Points with an infinite or non-positive T-hat are skipped.
    """
    if not epsilon > 0:
        raise ValueError("epsilon must be positive")
    b = np.asarray(batches, dtype=float)
    t = np.asarray(steps, dtype=float)
    if b.shape != t.shape:
        raise ValueError("batches and steps must have the same length")
    ok = np.isfinite(t) & (t > 0)
    b, t = b[ok], t[ok]
    if b.size < 2 or np.unique(b).size < 2:
        raise FitError(f"need at least two distinct feasible batch sizes, got {b.size}")
    if np.ptp(t) == 0.0:
        raise FitError("all step counts are equal; the batch size has no measurable effect")

    x, y = 1.0 / b, 1.0 / t
    design = np.column_stack([np.ones_like(x), x])
    (intercept, slope), *_ = np.linalg.lstsq(design, y, rcond=None)
    if not intercept > 0:
        raise FitError(f"non-positive intercept {intercept:.3g}: steps do not level off at large batch")
    X = epsilon / intercept
    Y = -slope * X
    if Y < 0:
        raise FitError(f"negative variance coefficient Y={Y:.3g}: steps grow with batch size")

    resid = y - design @ np.array([intercept, slope])
    ss_tot = float(np.sum((y - y.mean()) ** 2))
    r2 = 1.0 - float(np.sum(resid**2)) / ss_tot if ss_tot > 0 else math.nan
    return ComplexityModel(X=float(X), Y=float(Y), epsilon=float(epsilon), Z=0.0, r_squared=r2)


def fit_complexity_model(sweep, epsilon) -> ComplexityModel:
    """Fit from a BatchSweep (or a list of SweepRecords) using the per-batch mean T-hat."""
    records = getattr(sweep, "records", sweep)
    return fit_complexity_arrays([r.batch for r in records], [r.steps_mean for r in records], epsilon)
