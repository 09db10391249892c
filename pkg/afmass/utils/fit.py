"""Least-squares fits for limits at infinity and decay exponents."""

from __future__ import annotations

import numpy as np

from afmass import settings
from afmass.errors import FitIllConditioned
from afmass.models import DecayModel, MassEstimate
from afmass.utils.log import get_logger

log = get_logger()


def _scaled_design(radii: np.ndarray, powers) -> np.ndarray:
    # columns (r / r0)**-p keep the system well scaled for large p
    return np.column_stack([(radii / radii[0]) ** (-p) for p in powers])


def _solve(design: np.ndarray, values: np.ndarray) -> np.ndarray:
    spread = design.max(axis=0) - design.min(axis=0)
    variable = design[:, spread > 0]
    narrow = variable.shape[1] and spread[spread > 0].min()
    if narrow and narrow < settings.FIT_MIN_SPREAD:
        raise FitIllConditioned("radii are too clustered for the decay fit")
    cond = np.linalg.cond(design)
    if not np.isfinite(cond) or cond > settings.FIT_CONDITION_LIMIT:
        raise FitIllConditioned(f"decay fit condition number {cond:.3g}")
    coef, *_ = np.linalg.lstsq(design, values, rcond=None)
    return coef


def _validate(radii, values) -> tuple[np.ndarray, np.ndarray]:
    radii = np.asarray(radii, dtype=float)
    values = np.asarray(values, dtype=float)
    if radii.shape != values.shape or radii.size < 3:
        raise FitIllConditioned("a decay fit needs at least 3 samples")
    if np.any(np.diff(radii) <= 0) or radii[0] <= 0:
        raise FitIllConditioned("radii must be positive and increasing")
    if not np.all(np.isfinite(values)):
        raise FitIllConditioned("non-finite samples in decay fit")
    return radii, values


def fit_decay(radii, values, p: float) -> tuple[DecayModel, float]:
    """Fits values ~ c0 + c1 r**-p and returns the model and the residual
    norm."""
    radii, values = _validate(radii, values)
    design = np.column_stack([np.ones_like(radii), _scaled_design(radii, [p])])
    c0, c1 = _solve(design, values)
    residual = float(np.linalg.norm(design @ np.array([c0, c1]) - values))
    model = DecayModel(c0=float(c0), c1=float(c1 * radii[0] ** p), p=p)
    log.debug(
        "decay fit p=%s c0=%.12g c1=%.6g residual=%.3g",
        p,
        model.c0,
        model.c1,
        residual,
    )
    return model, residual


def extrapolate(radii, values, p: float) -> MassEstimate:
    """Limit at infinity of sampled values under the two-term model."""
    model, residual = fit_decay(radii, values, p)
    error = abs(float(values[-1]) - model.c0) + residual
    return MassEstimate(
        value=model.c0,
        error=error,
        radii=[float(r) for r in radii],
        raw=[float(v) for v in values],
        model=model,
    )


def fit_two_terms(radii, values, p1: float, p2: float) -> tuple[float, float]:
    """Fits values ~ c r**-p1 + d r**-p2 (no constant) and returns (c, d)."""
    radii, values = _validate(radii, values)
    design = _scaled_design(radii, [p1, p2])
    c, d = _solve(design, values)
    return float(c * radii[0] ** p1), float(d * radii[0] ** p2)


def fit_power_law(xs, ys) -> tuple[float, float]:
    """Fits ys ~ A xs**-k on a log-log scale and returns (k, A)."""
    xs = np.asarray(xs, dtype=float)
    ys = np.asarray(ys, dtype=float)
    if xs.size < 2 or np.any(xs <= 0) or np.any(ys <= 0):
        raise FitIllConditioned("power-law fit needs positive samples")
    slope, intercept = np.polyfit(np.log(xs), np.log(ys), 1)
    return float(-slope), float(np.exp(intercept))
