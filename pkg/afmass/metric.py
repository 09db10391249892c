"""Pointwise metric quantities in a single asymptotically flat chart.

Every function accepts one point of shape (n,) or a batch of shape (N, n)
and answers with the matching shape. Index conventions:

    dg[..., k, i, j]           d_k g_ij
    ddg[..., k, l, i, j]       d_k d_l g_ij
    christoffel[..., c, a, b]  Gamma^c_ab
"""

from __future__ import annotations

import numpy as np

from afmass.errors import (
    AnalyticDerivativesUnavailable,
    NonPositiveConformalFactor,
    NotPositiveDefinite,
    SingularPoint,
)
from afmass.families import ConformalFamily, build_family
from afmass.models import MetricSpec, PointwiseCurvature
from afmass.utils.log import get_logger
from afmass.utils.quadrature import embed

log = get_logger()


def _points(spec: MetricSpec, x) -> tuple[np.ndarray, bool]:
    x = np.asarray(x, dtype=float)
    single = x.ndim == 1
    pts = np.atleast_2d(x)
    if pts.shape[-1] != spec.n:
        raise ValueError(f"points must have {spec.n} coordinates")
    family = build_family(spec)
    if np.any(family.excluded(pts)):
        raise SingularPoint(
            f"{spec.label}: point inside the excluded region "
            f"|x| < {family.inner_radius:g}"
        )
    return pts, single


def _unwrap(single: bool, *arrays):
    if single:
        arrays = tuple(a[0] for a in arrays)
    return arrays[0] if len(arrays) == 1 else arrays


def _symmetrize(a: np.ndarray, axes=(-2, -1)) -> np.ndarray:
    return 0.5 * (a + np.swapaxes(a, *axes))


def metric_at(spec: MetricSpec, x) -> np.ndarray:
    """Metric matrix g_ij at chart points.

    Raises:
        SingularPoint - x inside the family's excluded region.
        NotPositiveDefinite - g fails a Cholesky factorization.
    """
    pts, single = _points(spec, x)
    g = _symmetrize(build_family(spec).metric(pts))
    try:
        np.linalg.cholesky(g)
    except np.linalg.LinAlgError:
        raise NotPositiveDefinite(
            f"{spec.label}: metric is not positive definite"
        ) from None
    return _unwrap(single, g)


def metric_derivatives_at(spec: MetricSpec, x, order: int = 1):
    """First (order=1) or first and second (order=2) metric derivatives.

    Raises:
        AnalyticDerivativesUnavailable - analytic mode on a family without
            closed-form derivatives.
        StepTooLarge - a finite-difference stencil leaves the chart.
    """
    if order not in (1, 2):
        raise ValueError("order must be 1 or 2")
    pts, single = _points(spec, x)
    family = build_family(spec)
    if spec.derivative_mode == "analytic":
        if not family.has_analytic:
            raise AnalyticDerivativesUnavailable(
                f"{spec.label} has no closed-form derivatives, use fd mode"
            )
        result = family.analytic_derivatives(pts, order)
    else:
        result = family.fd_derivatives(pts, order, spec.fd_step)

    if order == 1:
        return _unwrap(single, _symmetrize(result))
    dg, ddg = result
    ddg = _symmetrize(_symmetrize(ddg), axes=(-4, -3))
    return _unwrap(single, _symmetrize(dg), ddg)


def christoffel_symbols(ginv: np.ndarray, dg: np.ndarray) -> np.ndarray:
    """Gamma^c_ab = 1/2 g^cd (d_a g_bd + d_b g_ad - d_d g_ab)."""
    lower = (
        dg
        + np.einsum("...bad->...abd", dg)
        - np.einsum("...dab->...abd", dg)
    )
    return 0.5 * np.einsum("...cd,...abd->...cab", ginv, lower)


def curvature_from_derivatives(g, dg, ddg):
    """Christoffel symbols, Ricci tensor and scalar curvature from the
    metric and its first two derivatives, in any dimension."""
    ginv = np.linalg.inv(g)
    gamma = christoffel_symbols(ginv, dg)

    lower = (
        dg
        + np.einsum("...bad->...abd", dg)
        - np.einsum("...dab->...abd", dg)
    )
    dlower = (
        ddg
        + np.einsum("...ebad->...eabd", ddg)
        - np.einsum("...edab->...eabd", ddg)
    )
    dginv = -np.einsum("...cp,...epq,...qd->...ecd", ginv, dg, ginv)
    dgamma = 0.5 * (
        np.einsum("...ecd,...abd->...ecab", dginv, lower)
        + np.einsum("...cd,...eabd->...ecab", ginv, dlower)
    )

    ricci = (
        np.einsum("...aabd->...bd", dgamma)
        - np.einsum("...daab->...bd", dgamma)
        + np.einsum("...aae,...ebd->...bd", gamma, gamma)
        - np.einsum("...ade,...eab->...bd", gamma, gamma)
    )
    ricci = _symmetrize(ricci)
    scalar = np.einsum("...bd,...bd->...", ginv, ricci)
    return gamma, ricci, scalar


def curvature_at(spec: MetricSpec, x) -> PointwiseCurvature:
    """Christoffel symbols, Ricci tensor and scalar curvature at points."""
    x = np.asarray(x, dtype=float)
    single = x.ndim == 1
    pts = np.atleast_2d(x)
    g = metric_at(spec, pts)
    dg, ddg = metric_derivatives_at(spec, pts, order=2)
    gamma, ricci, scalar = curvature_from_derivatives(g, dg, ddg)
    if single:
        return PointwiseCurvature(
            christoffel=gamma[0], ricci=ricci[0], scalar=float(scalar[0])
        )
    return PointwiseCurvature(christoffel=gamma, ricci=ricci, scalar=scalar)


def conformal_scalar_curvature_hypersurface(
    base_scalar,
    factor,
    n: int,
    laplacian_psi=0.0,
    grad_psi_sq=0.0,
):
    """Scalar curvature of e^{2 psi} g1 on an (n-1)-dimensional hypersurface.

    Args:
        base_scalar: Scalar curvature of g1.
        factor: e^{2 psi}, the restricted conformal factor U^{4/(n-2)}.
        n (int): Ambient dimension.
        laplacian_psi: Laplacian of psi with respect to g1.
        grad_psi_sq: |d psi|^2 with respect to g1.

    Raises:
        NonPositiveConformalFactor - factor <= 0 somewhere.
    """
    factor = np.asarray(factor, dtype=float)
    if np.any(factor <= 0):
        raise NonPositiveConformalFactor("conformal factor must be positive")
    value = (
        base_scalar
        - 2 * (n - 2) * np.asarray(laplacian_psi)
        - (n - 3) * (n - 2) * np.asarray(grad_psi_sq)
    ) / factor
    return float(value) if np.ndim(value) == 0 else value


def _conformal(spec: MetricSpec) -> ConformalFamily:
    family = build_family(spec)
    if not isinstance(family, ConformalFamily):
        raise ValueError(f"{spec.label} is not conformally flat")
    return family


def _sphere_points(r: float, phi) -> np.ndarray:
    return r * embed(phi)


def conformal_scalar_curvature(spec: MetricSpec, x):
    """R = -(4(n-1)/(n-2)) U^{-(n+2)/(n-2)} Delta U."""
    family = _conformal(spec)
    n = spec.n
    pts = np.atleast_2d(np.asarray(x, dtype=float))
    u = 1.0 + family.factor.value(pts)
    lap = np.trace(family.factor.hessian(pts), axis1=-2, axis2=-1)
    value = -(4 * (n - 1) / (n - 2)) * u ** (-(n + 2) / (n - 2)) * lap
    return float(value[0]) if np.ndim(x) == 1 else value


def conformal_mean_curvature(spec: MetricSpec, r: float, phi):
    """H = U^{-2/(n-2)} (n-1)/r + (2(n-1)/(n-2)) U^{-n/(n-2)} d_r U."""
    family = _conformal(spec)
    n = spec.n
    pts = _sphere_points(r, phi)
    u = 1.0 + family.factor.value(pts)
    du = np.einsum("...i,...i->...", family.factor.gradient(pts), pts) / r
    value = u ** (-2 / (n - 2)) * (n - 1) / r + (
        2 * (n - 1) / (n - 2)
    ) * u ** (-n / (n - 2)) * du
    return float(value[0]) if np.ndim(phi) == 1 else value


def conformal_sphere_scalar_curvature(spec: MetricSpec, r: float, phi):
    """Induced scalar curvature of S_r for g = U^{4/(n-2)} delta.

    psi = (2/(n-2)) log U is restricted to the round sphere of radius r,
    whose Laplacian is Delta - Hess(nu, nu) - (n-1)/r d_r.
    """
    family = _conformal(spec)
    n = spec.n
    pts = _sphere_points(r, phi)
    nu = pts / r
    u = 1.0 + family.factor.value(pts)
    grad = family.factor.gradient(pts)
    hess = family.factor.hessian(pts)

    c = 2.0 / (n - 2)
    grad_psi = c * grad / u[:, None]
    hess_psi = c * (
        hess / u[:, None, None]
        - np.einsum("...i,...j->...ij", grad, grad) / u[:, None, None] ** 2
    )
    radial = np.einsum("...i,...i->...", grad_psi, nu)
    lap_psi = (
        np.trace(hess_psi, axis1=-2, axis2=-1)
        - np.einsum("...i,...ij,...j->...", nu, hess_psi, nu)
        - (n - 1) / r * radial
    )
    grad_sq = np.einsum("...i,...i->...", grad_psi, grad_psi) - radial**2
    value = conformal_scalar_curvature_hypersurface(
        (n - 1) * (n - 2) / r**2,
        u ** (4.0 / (n - 2)),
        n,
        laplacian_psi=lap_psi,
        grad_psi_sq=grad_sq,
    )
    return float(value[0]) if np.ndim(phi) == 1 else value
