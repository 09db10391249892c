"""Mass functionals: ADM flux and mass, the quasi-local F_g and its limit,
and the mass inequality check on coordinate spheres."""

from __future__ import annotations

from functools import partial
from typing import List, Optional

import numpy as np

from afmass import settings
from afmass.errors import (
    NotAsymptoticallySchwarzschild,
    UnsupportedDimension,
    ZeroRhoMin,
)
from afmass.families import build_family, decay_exponent, mass_normalization
from afmass.metric import metric_derivatives_at
from afmass.models import FgResult, MassEstimate, MetricSpec, PenroseCheck
from afmass.sphere import sphere_report
from afmass.utils.fit import extrapolate
from afmass.utils.log import get_logger
from afmass.utils.parallel import ordered_map
from afmass.utils.quadrature import spherical_chart, unit_sphere_area

log = get_logger()


def _require_dimension(n: int, low: int = 3, high: Optional[int] = None):
    if n < low or (high is not None and n > high):
        span = f"{low}..{high}" if high else f">= {low}"
        raise UnsupportedDimension(f"n={n} outside supported range {span}")


def flux_density(dg: np.ndarray, unit: np.ndarray) -> np.ndarray:
    """sum_j (d_i g_ij - d_j g_ii) x^j / r for dg[..., k, i, j]."""
    vector = np.einsum("...iij->...j", dg) - np.einsum("...jii->...j", dg)
    return np.einsum("...j,...j->...", vector, unit)


def adm_flux(
    spec: MetricSpec, r: float, q: int = settings.DEFAULT_QUADRATURE
) -> float:
    """Normalized ADM flux through S_r with the flat area element.

    Families rescaled by lambda^2 report the flux of the geometric mass,
    lambda^{n-2} times the base flux.

    Raises:
        UnsupportedDimension - n < 3.
    """
    _require_dimension(spec.n)
    n = spec.n
    family = build_family(spec)
    chart = spherical_chart(n, q)
    size = max(256, settings.CHUNK_SIZE // n)
    total = 0.0
    for start in range(0, chart.size, size):
        unit = chart.directions[start : start + size]
        dg = metric_derivatives_at(spec, r * unit, order=1)
        total += float(
            np.dot(chart.weights[start : start + size], flux_density(dg, unit))
        )
    scale = family.asymptotic_scale ** ((n - 4) / 2.0)
    return mass_normalization(n) * r ** (n - 1) * total * scale


def adm_mass(
    spec: MetricSpec,
    radii=settings.DEFAULT_RADII,
    q: int = settings.DEFAULT_QUADRATURE,
    threads: Optional[int] = None,
) -> MassEstimate:
    """ADM mass extrapolated from fluxes at `radii`.

    The flux is fitted to c0 + c1 r^-p with p = min(n - 2, decay order),
    p = 1 when the family declares no decay order.

    Raises:
        FitIllConditioned - radii too clustered.
    """
    radii = [float(r) for r in radii]
    p = decay_exponent(build_family(spec))
    raw = ordered_map(partial(adm_flux, spec, q=q), radii, threads)
    estimate = extrapolate(radii, raw, p)
    log.info(
        "adm mass of %s: %.10g (error %.3g)",
        spec.label,
        estimate.value,
        estimate.error,
    )
    return estimate


def fg(
    spec: MetricSpec, r: float, q: int = settings.DEFAULT_QUADRATURE
) -> FgResult:
    """F_g(S_r) = 1/2 (|S|/omega)^{(n-2)/(n-1)} (1 - (n-2)/(n-1) max H^2 /
    min rho).

    The value is total: when rho_min <= 0 the hypothesis of the mass
    inequality fails and the result is flagged rather than rejected.

    Raises:
        ZeroRhoMin - rho_min is exactly zero.
        UnsupportedDimension - n < 3.
    """
    _require_dimension(spec.n)
    n = spec.n
    report = sphere_report(spec, r, q)
    if report.rho_min == 0:
        raise ZeroRhoMin(f"{spec.label}: min rho vanishes on S_{r:g}")
    ratio = (n - 2) / (n - 1)
    area_term = (report.area / unit_sphere_area(n)) ** ratio
    value = 0.5 * area_term * (1.0 - ratio * report.maxH2 / report.rho_min)
    flagged = report.rho_min <= 0
    if flagged:
        log.warning("%s: rho_min <= 0 on S_%g, F_g flagged", spec.label, r)
    return FgResult(
        r=r,
        fg=value,
        area=report.area,
        maxH2=report.maxH2,
        rho_min=report.rho_min,
        hypothesis_holds=report.rho_min > ratio * report.maxH2,
        flagged=flagged,
    )


def fg_profile(
    spec: MetricSpec,
    radii=settings.DEFAULT_RADII,
    q: int = settings.DEFAULT_QUADRATURE,
    threads: Optional[int] = None,
) -> List[FgResult]:
    radii = [float(r) for r in radii]
    return ordered_map(partial(fg, spec, q=q), radii, threads)


def fg_limit(
    spec: MetricSpec,
    radii=settings.DEFAULT_RADII,
    q: int = settings.DEFAULT_QUADRATURE,
    threads: Optional[int] = None,
) -> MassEstimate:
    """Limit of F_g(S_r) under the model c0 + c1 / r.

    Raises:
        NotAsymptoticallySchwarzschild - the family does not declare the
            asymptotically Schwarzschild form.
    """
    if not build_family(spec).asymptotically_schwarzschild:
        raise NotAsymptoticallySchwarzschild(
            f"{spec.label} is not declared asymptotically Schwarzschild"
        )
    profile = fg_profile(spec, radii, q, threads)
    return extrapolate(
        [item.r for item in profile], [item.fg for item in profile], 1.0
    )


def penrose_like_check(
    spec: MetricSpec,
    r: float,
    q: int = settings.DEFAULT_QUADRATURE,
    mass: Optional[MassEstimate] = None,
) -> PenroseCheck:
    """Checks mass >= F_g(S_r) on an example metric.

    Outward minimization of S_r is assumed, not verified. When no mass
    estimate is given it is extrapolated with `adm_mass`.

    Raises:
        UnsupportedDimension - n outside 3..7.
    """
    _require_dimension(spec.n, 3, 7)
    n = spec.n
    if mass is None:
        mass = adm_mass(spec, q=q)
    result = fg(spec, r, q)
    margin = result.rho_min - (n - 2) / (n - 1) * result.maxH2
    budget = mass.error + settings.PENROSE_TOLERANCE * max(1.0, abs(result.fg))
    return PenroseCheck(
        hypothesis_holds=margin > 0,
        hypothesis_margin=margin,
        fg_value=result.fg,
        mass_value=mass.value,
        error_budget=budget,
        inequality_holds=mass.value >= result.fg - budget,
    )
