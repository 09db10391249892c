"""Quadrature rules for coordinate spheres and radial intervals.

Spherical angles follow the iterated sine/cosine map

    x1 = r cos(phi1), x2 = r sin(phi1) cos(phi2), ...,
    xn = r sin(phi1) ... sin(phi_{n-1}),

with phi1..phi_{n-2} in [0, pi] and phi_{n-1} in [0, 2 pi). The polar angle
phi_k carries the weight sin(phi_k)**(n-1-k) in the area element, so each
polar angle gets a Gauss-Jacobi rule in t = cos(phi) for that weight and the
azimuth gets the trapezoid rule. Nodes never sit on the poles.
"""

from __future__ import annotations

import math
from functools import lru_cache

import numpy as np
from numpy.polynomial.legendre import leggauss
from pydantic import BaseModel, ConfigDict
from scipy.special import roots_jacobi

from afmass import settings
from afmass.utils.log import get_logger

log = get_logger()


def unit_sphere_area(n: int) -> float:
    """omega_{n-1}, area of the unit sphere in R^n."""
    return 2.0 * math.pi ** (n / 2.0) / math.gamma(n / 2.0)


class SphericalChart(BaseModel):
    """Tensor-product quadrature on the unit sphere S^{n-1}.

    Attributes:
        n: int - Ambient dimension.
        q: int - Effective nodes per angle.
        angles: np.ndarray - Node angles, shape (N, n-1).
        weights: np.ndarray - Weights of the round unit-sphere measure.
        directions: np.ndarray - Unit vectors of the nodes, shape (N, n).
    """

    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    n: int
    q: int
    angles: np.ndarray
    weights: np.ndarray
    directions: np.ndarray

    @property
    def size(self) -> int:
        return self.weights.shape[0]

    def mean(self, values: np.ndarray) -> float:
        return float(np.dot(self.weights, values) / self.weights.sum())


def effective_quadrature(n: int, q: int) -> int:
    """Nodes per angle after applying the total node cap."""
    if n < 2:
        raise ValueError("spheres need n >= 2")
    cap = settings.MAX_SPHERE_NODES
    if q ** (n - 1) <= cap:
        return q
    reduced = max(settings.MIN_QUADRATURE, int(cap ** (1.0 / (n - 1))))
    log.warning(
        "sphere quadrature q=%d in n=%d exceeds %d nodes, using q=%d",
        q,
        n,
        cap,
        reduced,
    )
    return reduced


def polar_rule(exponent: int, q: int) -> tuple[np.ndarray, np.ndarray]:
    """Nodes in (0, pi) and weights for the integral of f(phi) sin^e(phi).

    With t = cos(phi) the weight becomes (1 - t^2)^((e-1)/2), so Gauss-Jacobi
    with alpha = beta = (e-1)/2 integrates it exactly and q nodes are exact
    for f polynomial in cos(phi) of degree 2q - 1. For e = 1 this is
    Gauss-Legendre.
    """
    alpha = (exponent - 1) / 2.0
    t, w = roots_jacobi(q, alpha, alpha)
    order = np.argsort(-t)
    return np.arccos(t[order]), w[order]


def azimuth_rule(q: int) -> tuple[np.ndarray, np.ndarray]:
    phi = 2.0 * math.pi * np.arange(q) / q
    return phi, np.full(q, 2.0 * math.pi / q)


@lru_cache(maxsize=64)
def spherical_chart(n: int, q: int) -> SphericalChart:
    """Builds the tensor-product rule for S^{n-1} with q nodes per angle."""
    q = effective_quadrature(n, q)
    rules = [polar_rule(n - 1 - k, q) for k in range(1, n - 1)]
    rules.append(azimuth_rule(q))

    grids = np.meshgrid(*[nodes for nodes, _ in rules], indexing="ij")
    weight_grids = np.meshgrid(*[w for _, w in rules], indexing="ij")
    angles = np.stack([g.ravel() for g in grids], axis=-1)
    weights = np.prod(np.stack([w.ravel() for w in weight_grids]), axis=0)
    directions = embed(angles)
    for arr in (angles, weights, directions):
        arr.setflags(write=False)
    return SphericalChart(
        n=n, q=q, angles=angles, weights=weights, directions=directions
    )


def embed(angles: np.ndarray) -> np.ndarray:
    """Unit vectors for spherical angles, shape (N, n-1) -> (N, n)."""
    angles = np.atleast_2d(np.asarray(angles, dtype=float))
    count, k = angles.shape
    out = np.empty((count, k + 1))
    sin_prod = np.ones(count)
    for j in range(k):
        out[:, j] = sin_prod * np.cos(angles[:, j])
        sin_prod = sin_prod * np.sin(angles[:, j])
    out[:, k] = sin_prod
    return out


def embed_tangents(angles: np.ndarray) -> np.ndarray:
    """Derivatives d e / d phi_a of the unit embedding, shape (N, n-1, n)."""
    angles = np.atleast_2d(np.asarray(angles, dtype=float))
    count, k = angles.shape
    sines = np.sin(angles)
    cosines = np.cos(angles)
    tangents = np.zeros((count, k, k + 1))
    for a in range(k):
        prefix = np.prod(sines[:, :a], axis=1)
        tangents[:, a, a] = -prefix * sines[:, a]
        running = prefix * cosines[:, a]
        for j in range(a + 1, k):
            tangents[:, a, j] = running * cosines[:, j]
            running = running * sines[:, j]
        tangents[:, a, k] = running
    return tangents


def gauss_legendre(a: float, b: float, order: int):
    """Gauss-Legendre nodes and weights on [a, b]."""
    t, w = leggauss(order)
    half = 0.5 * (b - a)
    return a + half * (t + 1.0), half * w


def composite_rule(edges, order: int) -> tuple[np.ndarray, np.ndarray]:
    nodes, weights = [], []
    for a, b in zip(edges[:-1], edges[1:]):
        x, w = gauss_legendre(a, b, order)
        nodes.append(x)
        weights.append(w)
    return np.concatenate(nodes), np.concatenate(weights)


def radial_rule(
    a: float,
    b: float,
    breakpoints=(),
    order: int = settings.RADIAL_ORDER,
    panels_per_decade: int = settings.PANELS_PER_DECADE,
) -> tuple[np.ndarray, np.ndarray]:
    """Composite Gauss-Legendre rule on [a, b] with log-spaced panels.

    Panels are split at every breakpoint inside (a, b). When a == 0 the
    first panel reaches down to the origin.
    """
    if not b > a >= 0:
        raise ValueError(f"invalid radial interval [{a}, {b}]")
    inside = [p for p in breakpoints if a < p < b]
    if a > 0:
        low = a
    else:
        low = min(inside + [1.0, b]) / 8.0
    panels = max(1, math.ceil(math.log10(b / low) * panels_per_decade))
    edges = set(np.geomspace(low, b, panels + 1).tolist())
    edges.update(inside)
    edges.update([a, b])
    edges = sorted(e for e in edges if a <= e <= b)
    merged = [edges[0]]
    for e in edges[1:]:
        if e - merged[-1] > 1e-12 * b:
            merged.append(e)
    merged[-1] = b
    return composite_rule(merged, order)
