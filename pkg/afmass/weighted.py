"""Weighted C^k_{-tau} seminorms, the operator D(g) and the mass identities
built on it.

D(g) = d_i d_j g_ij - d_j d_j g_ii is the divergence of the ADM flux
vector, so the mass is the volume integral of D(g) over the chart plus the
flux through the inner sphere of charts with an excluded ball. The matter
term is the volume integral of the scalar curvature with the Riemannian
volume form.
"""

from __future__ import annotations

from functools import partial
from typing import Callable, Optional, Protocol

import numpy as np

from afmass import settings
from afmass.errors import TailNotNegligible, UnsupportedDimension
from afmass.families import (
    build_family,
    decay_exponent,
    mass_normalization,
)
from afmass.mass import adm_flux, adm_mass
from afmass.metric import (
    curvature_from_derivatives,
    metric_at,
    metric_derivatives_at,
)
from afmass.models import (
    DefectReport,
    DivergenceMass,
    MetricSpec,
    WeightedNormParams,
)
from afmass.utils.fit import extrapolate, fit_power_law
from afmass.utils.log import get_logger
from afmass.utils.parallel import ordered_map
from afmass.utils.quadrature import radial_rule, spherical_chart

log = get_logger()


class ScalarField(Protocol):
    n: int

    def evaluate(self, x: np.ndarray):
        """Returns value (N,), gradient (N, n) and Hessian (N, n, n)."""


class RadialField:
    """Radial function f(|x|) given by f, f' and f''."""

    def __init__(
        self,
        n: int,
        value: Callable,
        first: Callable,
        second: Callable,
    ):
        self.n = n
        self._value = value
        self._first = first
        self._second = second

    @classmethod
    def power(cls, n: int, tau: float) -> RadialField:
        """|x|^-tau."""
        return cls(
            n,
            lambda r: r**-tau,
            lambda r: -tau * r ** (-tau - 1),
            lambda r: tau * (tau + 1) * r ** (-tau - 2),
        )

    @classmethod
    def from_potential(cls, potential) -> RadialField:
        """Shell potential v_i of `solve_shell_potential`."""
        return cls(
            potential.n, potential.value, potential.first, potential.second
        )

    def evaluate(self, x: np.ndarray):
        r = np.linalg.norm(x, axis=-1)
        f1r = self._first(r) / r
        c2 = (self._second(r) - f1r) / r**2
        grad = f1r[:, None] * x
        hess = f1r[:, None, None] * np.eye(self.n) + c2[:, None, None] * (
            np.einsum("...i,...j->...ij", x, x)
        )
        return self._value(r), grad, hess


def _grid(n: int, params: WeightedNormParams) -> np.ndarray:
    directions = spherical_chart(n, params.q).directions
    radii = params.radii()
    return np.reshape(radii[:, None, None] * directions[None], (-1, n))


def _node_max(a: np.ndarray) -> np.ndarray:
    return np.abs(a).reshape(a.shape[0], -1).max(axis=1)


def _weighted_max(points, tau: float, k: int, value, grad, hess) -> float:
    r = np.linalg.norm(points, axis=-1)
    terms = [r**tau * _node_max(value)]
    if k >= 1:
        terms.append(r ** (1 + tau) * _node_max(grad))
    if k >= 2:
        terms.append(r ** (2 + tau) * _node_max(hess))
    return float(max(term.max() for term in terms))


def weighted_seminorm(f: ScalarField, params: WeightedNormParams) -> float:
    """Grid approximation of sup |x|^{|g| + tau} |d^g f| over |g| <= k on
    |x| >= inner_radius."""
    points = _grid(f.n, params)
    value, grad, hess = f.evaluate(points)
    return _weighted_max(points, params.tau, params.k, value, grad, hess)


def weighted_metric_distance(
    spec: MetricSpec,
    reference: Optional[MetricSpec] = None,
    params: Optional[WeightedNormParams] = None,
) -> float:
    """Weighted C^k_{-tau} seminorm of g - reference, maximized over
    components; the reference defaults to the Euclidean metric."""
    params = params or WeightedNormParams(tau=max(spec.n - 2 - 0.01, 0.01))
    points = _grid(spec.n, params)
    diff = metric_at(spec, points) - np.eye(spec.n)
    dg, ddg = metric_derivatives_at(spec, points, order=2)
    if reference is not None:
        diff = diff - (metric_at(reference, points) - np.eye(spec.n))
        dref, ddref = metric_derivatives_at(reference, points, order=2)
        dg, ddg = dg - dref, ddg - ddref
    return _weighted_max(points, params.tau, params.k, diff, dg, ddg)


def _d_operator(ddg: np.ndarray) -> np.ndarray:
    return np.einsum("...ijij->...", ddg) - np.einsum("...jjii->...", ddg)


def d_operator_at(spec: MetricSpec, x):
    """D(g) = sum d_i d_j g_ij - sum d_j d_j g_ii in the fixed chart."""
    x = np.asarray(x, dtype=float)
    _, ddg = metric_derivatives_at(spec, np.atleast_2d(x), order=2)
    value = _d_operator(ddg)
    return float(value[0]) if x.ndim == 1 else value


def d_minus_r_seminorm(
    spec: MetricSpec, params: Optional[WeightedNormParams] = None
) -> float:
    """sup |x|^{2 + 2 tau} |D(g) - R(g)| over the weighted grid."""
    params = params or WeightedNormParams(tau=max(spec.n - 2 - 0.01, 0.01))
    points = _grid(spec.n, params)
    g = metric_at(spec, points)
    dg, ddg = metric_derivatives_at(spec, points, order=2)
    _, _, scalar = curvature_from_derivatives(g, dg, ddg)
    r = np.linalg.norm(points, axis=-1)
    excess = np.abs(_d_operator(ddg) - scalar)
    return float(np.max(r ** (2 + 2 * params.tau) * excess))


def _shell_density(spec: MetricSpec, q: int, kind: str, r: float) -> float:
    """r^{n-1} times the round-sphere quadrature of D(g) (kind "D") or of
    R(g) sqrt(det g) (kind "R") on S_r."""
    chart = spherical_chart(spec.n, q)
    points = r * chart.directions
    if kind == "D":
        _, ddg = metric_derivatives_at(spec, points, order=2)
        values = _d_operator(ddg)
    else:
        g = metric_at(spec, points)
        dg, ddg = metric_derivatives_at(spec, points, order=2)
        _, _, scalar = curvature_from_derivatives(g, dg, ddg)
        values = scalar * np.sqrt(np.linalg.det(g))
    return r ** (spec.n - 1) * float(np.dot(chart.weights, values))


def _volume(spec, inner, outer, q, kind, threads) -> float:
    family = build_family(spec)
    nodes, weights = radial_rule(inner, outer, family.breakpoints)
    density = partial(_shell_density, spec, q, kind)
    sigma = ordered_map(density, nodes, threads)
    return float(np.dot(weights, sigma))


def _matter_tail(spec, outer, q, tolerance) -> float:
    """Integral beyond `outer` of the R(g) shell density decaying like r^-s,
    fitted at outer/4, outer/2 and outer.

    Raises:
        TailNotNegligible - the density does not decay fast enough, changes
            sign, or leaves a tail above `tolerance`.
    """
    radii = [outer / 4, outer / 2, outer]
    sigma = np.array([_shell_density(spec, q, "R", r) for r in radii])
    if np.all(sigma == 0):
        return 0.0
    if not (np.all(sigma > 0) or np.all(sigma < 0)):
        raise TailNotNegligible(f"R density changes sign near r={outer}")
    slope, _ = fit_power_law(radii, np.abs(sigma))
    if slope <= 1.05:
        raise TailNotNegligible(
            f"R density decays like r^-{slope:.3g}, not integrable"
        )
    tail = float(sigma[-1] * outer / (slope - 1))
    if abs(tail) > tolerance:
        raise TailNotNegligible(
            f"R tail {tail:.3g} beyond r={outer} exceeds {tolerance:.3g}"
        )
    return tail


def _boundary_tail(spec, outer, q, tolerance, threads) -> float:
    """Mass minus the flux through S_outer, from the fluxes at outer/4,
    outer/2 and outer extrapolated with the family's decay exponent.

    By the divergence theorem this is the integral of D(g) beyond `outer`.

    Raises:
        TailNotNegligible - the flux still moves by more than `tolerance`
            between outer/2 and outer.
    """
    radii = [outer / 4, outer / 2, outer]
    fluxes = ordered_map(partial(adm_flux, spec, q=q), radii, threads)
    drift = abs(fluxes[-1] - fluxes[-2])
    if drift > tolerance:
        raise TailNotNegligible(
            f"flux moves by {drift:.3g} up to r={outer}, above {tolerance:.3g}"
        )
    limit = extrapolate(radii, fluxes, decay_exponent(build_family(spec)))
    return float(limit.value - fluxes[-1])


def mass_via_divergence(
    spec: MetricSpec,
    outer_radius: float = settings.DEFAULT_OUTER_RADIUS,
    q: int = settings.VOLUME_QUADRATURE,
    threads: Optional[int] = None,
) -> DivergenceMass:
    """ADM mass as the volume integral of D(g).

    Charts with an excluded ball add the flux through the inner sphere;
    the region beyond `outer_radius` is closed by the boundary flux there.

    Raises:
        TailNotNegligible - see `_boundary_tail`.
        UnsupportedDimension - n < 3.
    """
    n = spec.n
    if n < 3:
        raise UnsupportedDimension("the divergence mass needs n >= 3")
    family = build_family(spec)
    factor = mass_normalization(n) * family.asymptotic_scale ** ((n - 4) / 2)
    inner = family.inner_radius
    core = adm_flux(spec, inner, q) if inner > 0 else 0.0
    volume = factor * _volume(spec, inner, outer_radius, q, "D", threads)
    partial_mass = core + volume
    tolerance = settings.TAIL_TOLERANCE * max(1.0, abs(partial_mass))
    tail = _boundary_tail(spec, outer_radius, q, tolerance, threads)
    log.info(
        "divergence mass of %s: core %.6g volume %.6g tail %.3g",
        spec.label,
        core,
        volume,
        tail,
    )
    return DivergenceMass(
        value=partial_mass + tail,
        core_flux=core,
        volume_integral=volume,
        tail=tail,
        outer_radius=outer_radius,
    )


def matter_integral(
    spec: MetricSpec,
    outer_radius: float = settings.DEFAULT_OUTER_RADIUS,
    q: int = settings.VOLUME_QUADRATURE,
    threads: Optional[int] = None,
) -> float:
    """(1 / (2 (n-1) omega)) int R(g) dV_g over the chart.

    Families with compactly supported scalar curvature get no tail.
    """
    n = spec.n
    if n < 3:
        raise UnsupportedDimension("the matter integral needs n >= 3")
    family = build_family(spec)
    inner = family.inner_radius
    total = _volume(spec, inner, outer_radius, q, "R", threads)
    if not family.compact_scalar_support:
        tolerance = settings.TAIL_TOLERANCE * max(1.0, abs(total))
        total += _matter_tail(spec, outer_radius, q, tolerance)
    return mass_normalization(n) * total


def mass_matter_defect(
    spec: MetricSpec,
    radii=settings.DEFAULT_RADII,
    q: int = settings.DEFAULT_QUADRATURE,
    outer_radius: float = settings.DEFAULT_OUTER_RADIUS,
    threads: Optional[int] = None,
) -> DefectReport:
    """ADM mass minus the matter term."""
    mass = adm_mass(spec, radii, q, threads)
    matter = matter_integral(
        spec, outer_radius, settings.VOLUME_QUADRATURE, threads
    )
    return DefectReport(
        mass=mass, matter_integral=matter, defect=mass.value - matter
    )
