"""Geometry of coordinate spheres S_r = {|x| = r}.

S_r is the level set of F = |x|. The outward normal, the second
fundamental form and the mean curvature come from the chart Hessian of F,

    Hess_g F = (delta - x^ x^T) / r - Gamma^k x^_k,

so one formula serves every family. The induced scalar curvature defaults
to the Gauss equation rho = R - 2 Ric(N, N) + H^2 - |II|^2; the "intrinsic"
method differentiates the induced metric in the angles instead.
"""

from __future__ import annotations

from typing import Literal

import numpy as np

from afmass import settings
from afmass.errors import DegenerateNormal, PoleEvaluation
from afmass.families import ConformalFamily, build_family
from afmass.metric import (
    christoffel_symbols,
    curvature_from_derivatives,
    metric_at,
    metric_derivatives_at,
)
from afmass.models import MetricSpec, SphereReport
from afmass.utils.fit import fit_two_terms
from afmass.utils.log import get_logger
from afmass.utils.quadrature import embed, embed_tangents, spherical_chart

log = get_logger()

ScalarMethod = Literal["gauss", "intrinsic"]


def _angles(n: int, phi) -> tuple[np.ndarray, bool]:
    phi = np.asarray(phi, dtype=float)
    single = phi.ndim == 0 or (phi.ndim == 1 and phi.size == n - 1)
    angles = np.reshape(phi, (-1, n - 1))
    return angles, single


def _check_poles(angles: np.ndarray, margin: float = 0.0) -> None:
    polar = angles[:, :-1]
    if polar.size == 0:
        return
    distance = np.minimum(polar, np.pi - polar)
    if np.any(distance <= max(margin, settings.POLE_TOLERANCE)):
        raise PoleEvaluation("spherical angles too close to a pole")


def _chunk_size(n: int) -> int:
    return max(256, settings.CHUNK_SIZE * 9 // n**2)


def _chunks(count: int, n: int):
    size = _chunk_size(n)
    for start in range(0, count, size):
        yield slice(start, min(start + size, count))


def _node_geometry(spec: MetricSpec, r: float, angles, curvature: bool):
    """Per-node area density, II (chart indices), H, |II|^2 and, with
    `curvature`, the Gauss-equation rho."""
    n = spec.n
    unit = embed(angles)
    pts = r * unit
    g = metric_at(spec, pts)
    ginv = np.linalg.inv(g)
    if curvature:
        dg, ddg = metric_derivatives_at(spec, pts, order=2)
        gamma, ricci, scalar = curvature_from_derivatives(g, dg, ddg)
    else:
        dg = metric_derivatives_at(spec, pts, order=1)
        gamma = christoffel_symbols(ginv, dg)

    norm2 = np.einsum("...i,...ij,...j->...", unit, ginv, unit)
    if not np.all(np.isfinite(norm2)) or np.any(norm2 <= 0):
        raise DegenerateNormal(f"{spec.label}: degenerate normal on S_{r:g}")
    norm = np.sqrt(norm2)

    eye = np.eye(n)
    hess = (eye - np.einsum("...i,...j->...ij", unit, unit)) / r
    hess = hess - np.einsum("...kij,...k->...ij", gamma, unit)
    n_up = np.einsum("...ij,...j->...i", ginv, unit) / norm[:, None]
    n_low = unit / norm[:, None]
    proj = eye - np.einsum("...i,...j->...ij", n_up, n_low)
    second = (
        np.einsum("...ia,...jb,...ij->...ab", proj, proj, hess)
        / norm[:, None, None]
    )
    mean = np.einsum("...ab,...ab->...", ginv, second)
    second_sq = np.einsum(
        "...ac,...bd,...ab,...cd->...", ginv, ginv, second, second
    )
    fields = {
        "density": np.sqrt(np.linalg.det(g)) * norm,
        "second": second,
        "H": mean,
        "II2": second_sq,
    }
    if curvature:
        ric_nn = np.einsum("...i,...ij,...j->...", n_up, ricci, n_up)
        fields["rho"] = scalar - 2 * ric_nn + mean**2 - second_sq
    return fields


def induced_metric_at(spec: MetricSpec, r: float, phi) -> np.ndarray:
    """gamma_ab = g(d_a, d_b) on S_r at spherical angles phi.

    Raises:
        PoleEvaluation - a polar angle sits on a pole.
    """
    angles, single = _angles(spec.n, phi)
    _check_poles(angles)
    tangents = r * embed_tangents(angles)
    g = metric_at(spec, r * embed(angles))
    gamma = np.einsum("...ai,...ij,...bj->...ab", tangents, g, tangents)
    return gamma[0] if single else gamma


def sphere_area(
    spec: MetricSpec, r: float, q: int = settings.DEFAULT_QUADRATURE
) -> float:
    """Area of S_r: r^{n-1} times the round-measure quadrature of
    sqrt(det g) |dF|_g."""
    chart = spherical_chart(spec.n, q)
    total = 0.0
    for part in _chunks(chart.size, spec.n):
        fields = _node_geometry(spec, r, chart.angles[part], curvature=False)
        total += float(np.dot(chart.weights[part], fields["density"]))
    return r ** (spec.n - 1) * total


def second_fundamental_form(spec: MetricSpec, r: float, phi):
    """II in angular coordinates, H and |II|^2 at points of S_r."""
    angles, single = _angles(spec.n, phi)
    _check_poles(angles)
    fields = _node_geometry(spec, r, angles, curvature=False)
    tangents = r * embed_tangents(angles)
    second = np.einsum(
        "...ai,...ij,...bj->...ab", tangents, fields["second"], tangents
    )
    if single:
        return second[0], float(fields["H"][0]), float(fields["II2"][0])
    return second, fields["H"], fields["II2"]


def mean_curvature_at(spec: MetricSpec, r: float, phi):
    """Mean curvature of S_r, positive on round Euclidean spheres.

    Raises:
        DegenerateNormal - |dF|_g vanishes or is not finite.
    """
    angles, single = _angles(spec.n, phi)
    _check_poles(angles)
    mean = _node_geometry(spec, r, angles, curvature=False)["H"]
    return float(mean[0]) if single else mean


def _intrinsic_scalar(spec: MetricSpec, r: float, angles: np.ndarray):
    k = spec.n - 1
    h = settings.SPHERE_FD_STEP
    _check_poles(angles, margin=2 * h)
    steps = h * np.eye(k)

    def gamma(shift):
        return induced_metric_at(spec, r, angles + shift)

    center = gamma(0.0)
    plus = [gamma(steps[a]) for a in range(k)]
    minus = [gamma(-steps[a]) for a in range(k)]
    dgamma = np.stack(
        [(plus[a] - minus[a]) / (2 * h) for a in range(k)], axis=1
    )
    ddgamma = np.empty(center.shape[:1] + (k, k, k, k))
    for a in range(k):
        ddgamma[:, a, a] = (plus[a] - 2 * center + minus[a]) / h**2
        for b in range(a + 1, k):
            mixed = (
                gamma(steps[a] + steps[b])
                - gamma(steps[a] - steps[b])
                - gamma(-steps[a] + steps[b])
                + gamma(-steps[a] - steps[b])
            ) / (4 * h**2)
            ddgamma[:, a, b] = mixed
            ddgamma[:, b, a] = mixed
    _, _, scalar = curvature_from_derivatives(center, dgamma, ddgamma)
    return scalar


def intrinsic_scalar_curvature_at(
    spec: MetricSpec, r: float, phi, method: ScalarMethod = "gauss"
):
    """Scalar curvature rho of (S_r, gamma).

    "gauss" uses the Gauss equation with ambient curvature, "intrinsic"
    second-order differences of gamma with step SPHERE_FD_STEP in the angles.
    """
    angles, single = _angles(spec.n, phi)
    if method == "intrinsic":
        rho = _intrinsic_scalar(spec, r, angles)
    else:
        _check_poles(angles)
        rho = _node_geometry(spec, r, angles, curvature=True)["rho"]
    return float(rho[0]) if single else rho


def sphere_report(
    spec: MetricSpec, r: float, q: int = settings.DEFAULT_QUADRATURE
) -> SphereReport:
    """Area and node extrema of H, H^2 and rho on S_r."""
    chart = spherical_chart(spec.n, q)
    area = 0.0
    means, rhos = [], []
    for part in _chunks(chart.size, spec.n):
        fields = _node_geometry(spec, r, chart.angles[part], curvature=True)
        area += float(np.dot(chart.weights[part], fields["density"]))
        means.append(fields["H"])
        rhos.append(fields["rho"])
    mean = np.concatenate(means)
    rho = np.concatenate(rhos)
    return SphereReport(
        r=r,
        area=r ** (spec.n - 1) * area,
        H_min=float(mean.min()),
        H_max=float(mean.max()),
        maxH2=float(np.max(mean**2)),
        rho_min=float(rho.min()),
        rho_max=float(rho.max()),
        q=chart.q,
    )


def sphere_laplacian(func, n: int, r: float, phi) -> np.ndarray:
    """Laplace-Beltrami operator of the round S_r applied to `func`.

    `func` maps chart points (N, n) to values (N,). Angular derivatives use
    fourth-order central differences with step LAPLACIAN_FD_STEP.
    """
    angles, single = _angles(n, phi)
    h = settings.LAPLACIAN_FD_STEP
    _check_poles(angles, margin=3 * h)
    k = n - 1

    def f(shift):
        return func(r * embed(angles + shift))

    center = f(0.0)
    sines = np.sin(angles)
    total = np.zeros(angles.shape[0])
    for a in range(k):
        e = h * np.eye(k)[a]
        p1, m1, p2, m2 = f(e), f(-e), f(2 * e), f(-2 * e)
        second = (-p2 + 16 * p1 - 30 * center + 16 * m1 - m2) / (12 * h**2)
        first = (-p2 + 8 * p1 - 8 * m1 + m2) / (12 * h)
        exponent = n - 2 - a if a < k - 1 else 0
        term = second
        if exponent:
            term = term + exponent * first / np.tan(angles[:, a])
        total += term / np.prod(sines[:, :a] ** 2, axis=1)
    lap = total / r**2
    return lap[0] if single else lap


def laplacian_decomposition_residual(spec: MetricSpec, r: float, phi):
    """Delta U - (Delta_S U + Hess U(nu, nu) + (n-1)/r d_r U) for the
    conformal factor U of a conformally flat spec."""
    family = build_family(spec)
    if not isinstance(family, ConformalFamily):
        raise ValueError(f"{spec.label} is not conformally flat")
    n = spec.n
    angles, single = _angles(n, phi)
    factor = family.factor
    pts = r * embed(angles)
    nu = pts / r
    hess = factor.hessian(pts)
    lap = np.trace(hess, axis1=-2, axis2=-1)
    hess_nn = np.einsum("...i,...ij,...j->...", nu, hess, nu)
    radial = np.einsum("...i,...i->...", factor.gradient(pts), nu)
    lap_sphere = np.atleast_1d(
        sphere_laplacian(lambda y: 1.0 + factor.value(y), n, r, angles)
    )
    residual = lap - (lap_sphere + hess_nn + (n - 1) / r * radial)
    return float(residual[0]) if single else residual


def expansion_coefficients(
    spec: MetricSpec,
    radii,
    q: int = settings.DEFAULT_QUADRATURE,
    quantity: Literal["H", "rho"] = "H",
) -> tuple[float, float]:
    """Leading coefficients of sphere-averaged H or rho.

    H - (n-1)/r is fitted to c r^{1-n} + d r^{-n} and rho - (n-1)(n-2)/r^2
    to c r^{-n} + d r^{-n-1}; returns (c, d).
    """
    n = spec.n
    chart = spherical_chart(n, q)
    key = "H" if quantity == "H" else "rho"
    values = []
    for r in radii:
        nodes = []
        for part in _chunks(chart.size, n):
            fields = _node_geometry(
                spec, r, chart.angles[part], curvature=quantity == "rho"
            )
            nodes.append(fields[key])
        mean = chart.mean(np.concatenate(nodes))
        if quantity == "H":
            values.append(mean - (n - 1) / r)
        else:
            values.append(mean - (n - 1) * (n - 2) / r**2)
    if quantity == "H":
        return fit_two_terms(radii, values, n - 1, n)
    return fit_two_terms(radii, values, n, n + 1)


def random_sphere_points(n: int, count: int, seed: int = 0) -> np.ndarray:
    """Angles of `count` random points away from the poles."""
    rng = np.random.default_rng(seed)
    polar = rng.uniform(0.2, np.pi - 0.2, size=(count, n - 2))
    azimuth = rng.uniform(0.0, 2 * np.pi, size=(count, 1))
    return np.concatenate([polar, azimuth], axis=1)
