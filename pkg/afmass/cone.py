"""Cone angle of asymptotically conical surfaces.

For g = dr^2 + s(r, theta)^2 dtheta^2 the Gauss curvature is K = -s_rr / s
and the coordinate circle Gamma_r has kappa_g ds = s_r dtheta. Every cap
closes smoothly at the origin (s_r(0) = 1), so

    int_{B_r} K dA = int int -s_rr dr dtheta + kinks + 2 pi (chi - 1)

and Gauss-Bonnet reads int_{B_r} K dA + int_{Gamma_r} kappa_g ds = 2 pi chi.
The cone mass is 1 - alpha, the deficit of the asymptotic cone angle.
"""

from __future__ import annotations

import math
from typing import List, Optional

import numpy as np

from afmass import settings
from afmass.errors import (
    ConfigInvalid,
    EstimatesDisagree,
    MissingCap,
    SingularPoint,
)
from afmass.metric import christoffel_symbols
from afmass.models import ConeMassEstimate, ExperimentParams, ExperimentReport
from afmass.sequences import (
    assemble_report,
    blow_up_window,
    c2_window_distance,
    escaping_window,
)
from afmass.surfaces import ConicalSurface
from afmass.utils.fit import extrapolate
from afmass.utils.log import get_logger
from afmass.utils.quadrature import gauss_legendre

log = get_logger()

TWO_PI = 2 * math.pi


def gauss_curvature_at(surface: ConicalSurface, r, theta):
    """K = -s_rr / s.

    Raises:
        SingularPoint - r <= 0.
    """
    r = np.asarray(r, dtype=float)
    if np.any(r <= 0):
        raise SingularPoint("Gauss curvature needs r > 0")
    s, _, s_rr, _ = surface.shape(r, theta)
    value = -s_rr / s
    return float(value) if np.ndim(value) == 0 else value


def _circle(q: int) -> np.ndarray:
    return TWO_PI * np.arange(q) / q


def geodesic_curvature_integral(
    surface: ConicalSurface, r: float, q: int = settings.DEFAULT_QUADRATURE
) -> float:
    """int kappa_g ds over Gamma_r, from the polar Christoffel symbols and
    the trapezoid rule in theta."""
    theta = _circle(q)
    s, s_r, _, s_theta = surface.shape(np.full(q, float(r)), theta)
    g = np.zeros((q, 2, 2))
    g[:, 0, 0] = 1.0
    g[:, 1, 1] = s**2
    dg = np.zeros((q, 2, 2, 2))
    dg[:, 0, 1, 1] = 2 * s * s_r
    dg[:, 1, 1, 1] = 2 * s * s_theta
    gamma = christoffel_symbols(np.linalg.inv(g), dg)
    # kappa_g ds = -Gamma^r_thth / s dtheta
    integrand = -gamma[:, 0, 1, 1] / s
    return float(np.sum(integrand) * TWO_PI / q)


def _panels(surface: ConicalSurface, r: float) -> List[float]:
    edges = {0.0, float(r)}
    edge = surface.r_cap
    while edge < r:
        edges.add(edge)
        edge *= 2
    edges.update(j for j in surface.junctions if j < r)
    return sorted(edges)


def total_gauss_curvature(
    surface: ConicalSurface, r: float, q: int = settings.DEFAULT_QUADRATURE
) -> float:
    """int_{B_r} K dA, cap included.

    Raises:
        MissingCap - the surface keeps the cone tip.
    """
    if surface.cap == "none":
        raise MissingCap("a cap model is needed to integrate over B_r")
    theta = _circle(q)
    edges = _panels(surface, r)
    total = 0.0
    for a, b in zip(edges[:-1], edges[1:]):
        nodes, weights = gauss_legendre(a, b, settings.CONE_RADIAL_ORDER)
        rr, tt = np.meshgrid(nodes, theta, indexing="ij")
        _, _, s_rr, _ = surface.shape(rr, tt)
        total += float(np.sum(weights[:, None] * -s_rr)) * TWO_PI / q
    for junction in surface.junctions:
        if junction < r:
            _, inside, _, _ = surface.shape(junction, theta, side="left")
            _, outside, _, _ = surface.shape(junction, theta, side="right")
            total += float(np.sum(inside - outside)) * TWO_PI / q
    return total + TWO_PI * (surface.chi - 1)


def gauss_bonnet_residual(
    surface: ConicalSurface, r: float, q: int = settings.DEFAULT_QUADRATURE
) -> float:
    """int_{B_r} K dA + int_{Gamma_r} kappa_g ds - 2 pi chi."""
    return (
        total_gauss_curvature(surface, r, q)
        + geodesic_curvature_integral(surface, r, q)
        - TWO_PI * surface.chi
    )


def cone_mass(
    surface: ConicalSurface,
    radii=None,
    q: int = settings.DEFAULT_QUADRATURE,
) -> ConeMassEstimate:
    """m_cone = 1 - alpha from the limit of the geodesic curvature integral,
    checked against the Gauss-Bonnet estimate when a cap is available.

    Raises:
        EstimatesDisagree - both estimates differ by more than
            CONE_AGREEMENT_TOLERANCE.
    """
    if radii is None:
        radii = [r * surface.r_cap for r in settings.DEFAULT_CONE_RADII]
    radii = [float(r) for r in radii]
    p = surface.decay_order
    raw = [
        1.0 - geodesic_curvature_integral(surface, r, q) / TWO_PI
        for r in radii
    ]
    estimate = extrapolate(radii, raw, p)
    bonnet, discrepancy = None, None
    if surface.cap != "none":
        values = [
            (total_gauss_curvature(surface, r, q) - TWO_PI * (surface.chi - 1))
            / TWO_PI
            for r in radii
        ]
        bonnet = extrapolate(radii, values, p).value
        discrepancy = abs(bonnet - estimate.value)
        if discrepancy > settings.CONE_AGREEMENT_TOLERANCE:
            raise EstimatesDisagree(
                f"{surface.label}: cone mass estimates differ by "
                f"{discrepancy:.3g}"
            )
    log.info("cone mass of %s: %.12g", surface.label, estimate.value)
    return ConeMassEstimate(
        **estimate.model_dump(),
        gauss_bonnet_value=bonnet,
        discrepancy=discrepancy,
    )


def cone_semicontinuity_experiment(
    surfaces: List[ConicalSurface],
    limit: ConicalSurface,
    windows,
    indices: List[int],
    label: str,
    kind: str = "blow_up",
    nominal_exponent: Optional[float] = None,
    fit_abscissa: Optional[List[float]] = None,
    reference=None,
) -> ExperimentReport:
    """Experiment report with cone masses in place of ADM masses."""
    masses = [cone_mass(surface).value for surface in surfaces]
    distances = [c2_window_distance(w, reference) for w in windows]
    return assemble_report(
        label,
        kind,
        indices,
        masses,
        limit.label,
        cone_mass(limit).value,
        distances,
        "C2 window distance to the identity"
        if reference is None
        else "C2 window distance to the limit",
        nominal_exponent=nominal_exponent,
        fit_abscissa=fit_abscissa,
    )


def run_cone_experiment(params: ExperimentParams) -> ExperimentReport:
    """Built-in cone sequences: blow-up, escaping points and constant."""
    base = params.surface or ConicalSurface(alpha=0.7, cap="smooth")
    spec = base.metric_spec()
    center = params.center or [8.0, 0.0]
    indices = params.indices
    L, res = params.window_L, params.resolution

    if params.kind == "blow_up":
        windows = [blow_up_window(spec, center, i, L, res) for i in indices]
        return cone_semicontinuity_experiment(
            [base.scaled(i) for i in indices],
            ConicalSurface.plane(),
            windows,
            indices,
            f"blow-up of {base.label} at {center}",
            "blow_up",
            nominal_exponent=1.0,
        )
    if params.kind == "escaping":
        direction = np.asarray(center) / np.linalg.norm(center)
        offsets = [params.offset_scale * i * direction for i in indices]
        windows = escaping_window(spec, offsets, L, res, normalize=True)
        return cone_semicontinuity_experiment(
            [base] * len(indices),
            ConicalSurface.plane(),
            windows,
            indices,
            f"escaping points of {base.label}",
            "escaping",
            nominal_exponent=base.decay_order,
            fit_abscissa=[float(np.linalg.norm(p)) for p in offsets],
        )
    if params.kind == "constant":
        limit = blow_up_window(spec, center, 1, L, res)
        windows = [blow_up_window(spec, center, 1, L, res) for _ in indices]
        return cone_semicontinuity_experiment(
            [base] * len(indices),
            base,
            windows,
            indices,
            f"constant sequence of {base.label}",
            "constant",
            reference=limit,
        )
    raise ConfigInvalid(f"no built-in cone experiment of kind {params.kind}")
