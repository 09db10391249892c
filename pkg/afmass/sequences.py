"""Convergence sequences and semicontinuity experiments.

Pointed convergence is certified on fixed chart windows: each term of a
sequence is sampled on the cube [-L, L]^n in normalized coordinates
together with its first and second derivatives, and compared with the limit
metric sampled on the same grid.

Built-in sequences:

    blow_up    (M, i^2 g, p), windows shrink around p and tend to R^n
    escaping   (M, g, p_i) with |p_i| -> infinity, windows tend to R^n
    shells     matter shells escaping to infinity, weighted distances
    constant   (M, g, p) repeated, no drop
"""

from __future__ import annotations

from typing import List, Optional, Sequence

import numpy as np

from afmass import settings
from afmass.errors import FitIllConditioned, GridMismatch, WindowExitsChart
from afmass.families import build_family
from afmass.mass import adm_mass
from afmass.metric import metric_at, metric_derivatives_at
from afmass.models import (
    ExperimentParams,
    ExperimentReport,
    MetricSpec,
    WeightedNormParams,
    WindowSample,
)
from afmass.shells import ShellFamily, shell_metric
from afmass.utils.fit import fit_power_law
from afmass.utils.log import get_logger
from afmass.weighted import matter_integral, weighted_metric_distance

log = get_logger()

CERTIFICATION = "fixed-window convergence"


def window_grid(n: int, L: float, resolution: int) -> np.ndarray:
    """Regular grid of the cube [-L, L]^n, shape (resolution^n, n)."""
    axis = np.linspace(-L, L, resolution)
    mesh = np.meshgrid(*([axis] * n), indexing="ij")
    return np.stack([m.ravel() for m in mesh], axis=-1)


def normalizing_map(g0: np.ndarray) -> np.ndarray:
    """A with A^T g0 A = identity."""
    return np.linalg.inv(np.linalg.cholesky(g0)).T


def _sample(
    spec: MetricSpec,
    center,
    A: np.ndarray,
    scale: float,
    L: float,
    resolution: int,
    label: str,
) -> WindowSample:
    n = spec.n
    center = np.asarray(center, dtype=float)
    grid = window_grid(n, L, resolution)
    points = center + grid @ A.T / scale
    if np.any(build_family(spec).excluded(points)):
        raise WindowExitsChart(f"{label}: window leaves the chart")
    g = metric_at(spec, points)
    dg, ddg = metric_derivatives_at(spec, points, order=2)
    return WindowSample(
        label=label,
        center=center.tolist(),
        scale=scale,
        L=L,
        resolution=resolution,
        points=grid,
        g=np.einsum("ia,...ij,jb->...ab", A, g, A),
        dg=np.einsum("ck,...cij,ia,jb->...kab", A, dg, A, A) / scale,
        ddg=np.einsum("ck,dl,...cdij,ia,jb->...klab", A, A, ddg, A, A)
        / scale**2,
    )


def blow_up_window(
    spec: MetricSpec,
    p,
    i: float,
    L: float = settings.WINDOW_L,
    resolution: int = settings.WINDOW_RESOLUTION,
) -> WindowSample:
    """Window of (M, i^2 g, p) in coordinates normalized at p.

    Raises:
        WindowExitsChart - the window around p leaves the chart.
    """
    center = np.asarray(p, dtype=float)
    if np.any(build_family(spec).excluded(center[None])):
        raise WindowExitsChart(f"{spec.label}: center outside the chart")
    A = normalizing_map(metric_at(spec, center))
    return _sample(
        spec, center, A, float(i), L, resolution, f"blow-up i={i:g}"
    )


def escaping_window(
    spec: MetricSpec,
    offsets: Sequence,
    L: float = settings.WINDOW_L,
    resolution: int = settings.WINDOW_RESOLUTION,
    normalize: bool = False,
) -> List[WindowSample]:
    """Windows of Translated(spec, p_i) around the chart origin.

    With `normalize` each window is also normalized at its center, which
    is needed when g does not tend to the identity in the chart.
    """
    samples = []
    for offset in offsets:
        moved = MetricSpec.translated(spec, offset)
        origin = np.zeros(spec.n)
        if np.any(build_family(moved).excluded(origin[None])):
            raise WindowExitsChart(f"{spec.label}: point {offset} outside")
        A = (
            normalizing_map(metric_at(moved, origin))
            if normalize
            else np.eye(spec.n)
        )
        norm = float(np.linalg.norm(offset))
        samples.append(
            _sample(moved, origin, A, 1.0, L, resolution, f"|p|={norm:g}")
        )
    return samples


def c2_window_distance(
    sample: WindowSample, reference: Optional[WindowSample] = None
) -> float:
    """Max over the grid, components and derivative orders 0..2 of the
    difference to the reference; the flat identity when none is given.

    Raises:
        GridMismatch - samples on different windows or grids.
    """
    if reference is None:
        n = sample.g.shape[-1]
        diffs = (sample.g - np.eye(n), sample.dg, sample.ddg)
    else:
        if (
            sample.points.shape != reference.points.shape
            or not np.allclose(sample.points, reference.points)
        ):
            raise GridMismatch("samples live on different window grids")
        diffs = (
            sample.g - reference.g,
            sample.dg - reference.dg,
            sample.ddg - reference.ddg,
        )
    return float(max(np.max(np.abs(d)) for d in diffs))


def _monotone_from(indices, distances) -> Optional[int]:
    for k in range(len(distances)):
        tail = distances[k:]
        if all(b <= a for a, b in zip(tail, tail[1:])):
            return indices[k]
    return None


def _fitted_exponent(xs, distances) -> Optional[float]:
    if len(distances) < 2 or min(distances) <= 0:
        return None
    try:
        exponent, _ = fit_power_law(xs, distances)
    except FitIllConditioned:
        return None
    return exponent


def assemble_report(
    label: str,
    kind: str,
    indices: List[int],
    masses: List[float],
    limit_label: str,
    limit_mass: float,
    distances: List[float],
    distance_kind: str,
    nominal_exponent: Optional[float] = None,
    fit_abscissa: Optional[List[float]] = None,
    matter: Optional[List[float]] = None,
    defects: Optional[List[float]] = None,
) -> ExperimentReport:
    """Verdict liminf m_i >= limit mass with the tail half of the sequence
    standing in for the liminf."""
    tail = masses[len(masses) // 2 :]
    liminf = float(min(tail))
    tolerance = 1e-9 * max(1.0, abs(limit_mass))
    growing = len(masses) > 1 and all(
        b > a for a, b in zip(masses, masses[1:])
    )
    report = ExperimentReport(
        label=label,
        kind=kind,
        indices=list(indices),
        masses=[float(m) for m in masses],
        limit_label=limit_label,
        limit_mass=float(limit_mass),
        distances=[float(d) for d in distances],
        distance_kind=distance_kind,
        liminf_mass=liminf,
        verdict=liminf >= limit_mass - tolerance,
        drop=liminf - limit_mass,
        drop_unbounded=growing and masses[-1] >= 2 * masses[0] > 0,
        fitted_exponent=_fitted_exponent(
            fit_abscissa or list(indices), distances
        ),
        nominal_exponent=nominal_exponent,
        monotone_from=_monotone_from(list(indices), list(distances)),
        matter=matter,
        defects=defects,
        certification=CERTIFICATION,
    )
    log.info(
        "%s: liminf %.6g limit %.6g verdict %s",
        label,
        liminf,
        limit_mass,
        report.verdict,
    )
    return report


def _default_spec(params: ExperimentParams) -> MetricSpec:
    return params.spec or MetricSpec.schwarzschild(params.n, 1.0)


def _mass(spec: MetricSpec, params: ExperimentParams) -> float:
    family = build_family(spec)
    if params.mass_mode == "analytic" and family.known_mass is not None:
        return family.known_mass
    radii = params.radii or settings.DEFAULT_RADII
    return adm_mass(spec, radii, params.q).value


def _blow_up(params: ExperimentParams) -> ExperimentReport:
    spec = _default_spec(params)
    n = spec.n
    center = params.center or [10.0] + [0.0] * (n - 1)
    masses, distances = [], []
    for i in params.indices:
        masses.append(_mass(MetricSpec.scaled(spec, i), params))
        sample = blow_up_window(
            spec, center, i, params.window_L, params.resolution
        )
        distances.append(c2_window_distance(sample))
        log.info(
            "blow-up i=%d mass %.6g distance %.3g",
            i,
            masses[-1],
            distances[-1],
        )
    return assemble_report(
        f"blow-up of {spec.label} at {center}",
        "blow_up",
        params.indices,
        masses,
        MetricSpec.euclidean(n).label,
        0.0,
        distances,
        "C2 window distance to the identity",
        nominal_exponent=1.0,
    )


def _escaping(params: ExperimentParams) -> ExperimentReport:
    spec = _default_spec(params)
    n = spec.n
    direction = np.zeros(n)
    direction[0] = 1.0
    if params.center is not None and np.linalg.norm(params.center) > 0:
        direction = np.asarray(params.center) / np.linalg.norm(params.center)
    offsets = [params.offset_scale * i * direction for i in params.indices]
    mass = _mass(spec, params)
    samples = escaping_window(
        spec, offsets, params.window_L, params.resolution
    )
    distances = [c2_window_distance(s) for s in samples]
    decay = build_family(spec).decay_order
    return assemble_report(
        f"escaping points of {spec.label}",
        "escaping",
        params.indices,
        [mass] * len(params.indices),
        MetricSpec.euclidean(n).label,
        0.0,
        distances,
        "C2 window distance to the identity",
        nominal_exponent=decay,
        fit_abscissa=[float(np.linalg.norm(p)) for p in offsets],
    )


def _shells(params: ExperimentParams) -> ExperimentReport:
    n = params.n
    tau = params.tau or 3 * (n - 2) / 4
    norm = WeightedNormParams(tau=tau, inner_radius=0.25, q=4)
    masses, matter, defects, distances = [], [], [], []
    for i in params.indices:
        spec = shell_metric(ShellFamily(n=n, i=i))
        masses.append(_mass(spec, params))
        matter.append(matter_integral(spec, q=4))
        defects.append(masses[-1] - matter[-1])
        distances.append(weighted_metric_distance(spec, None, norm))
        log.info(
            "shell i=%d mass %.6g matter %.6g distance %.3g",
            i,
            masses[-1],
            matter[-1],
            distances[-1],
        )
    return assemble_report(
        f"matter shells n={n}",
        "shells",
        params.indices,
        masses,
        MetricSpec.euclidean(n).label,
        0.0,
        distances,
        f"weighted C2_-{tau:g} distance to Euclidean",
        nominal_exponent=n - 2 - tau,
        matter=matter,
        defects=defects,
    )


def _constant(params: ExperimentParams) -> ExperimentReport:
    spec = _default_spec(params)
    center = params.center or [10.0] + [0.0] * (spec.n - 1)
    mass = _mass(spec, params)
    limit = blow_up_window(spec, center, 1, params.window_L, params.resolution)
    distances = [
        c2_window_distance(
            blow_up_window(
                spec, center, 1, params.window_L, params.resolution
            ),
            limit,
        )
        for _ in params.indices
    ]
    return assemble_report(
        f"constant sequence of {spec.label}",
        "constant",
        params.indices,
        [mass] * len(params.indices),
        spec.label,
        mass,
        distances,
        "C2 window distance to the limit",
    )


def run_semicontinuity_experiment(
    kind: str, params: Optional[ExperimentParams] = None
) -> ExperimentReport:
    """Runs a built-in sequence and reports masses, distances and the
    semicontinuity verdict."""
    params = params or ExperimentParams(kind=kind)
    if params.kind != kind:
        params = params.model_copy(update={"kind": kind})
    runners = {
        "blow_up": _blow_up,
        "escaping": _escaping,
        "shells": _shells,
        "constant": _constant,
    }
    log.info("running %s experiment on indices %s", kind, params.indices)
    return runners[kind](params)
