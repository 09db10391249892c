"""Metric families behind MetricSpec.

Families evaluate on batches of chart points x of shape (N, n):

    metric(x)                   g, shape (N, n, n)
    analytic_derivatives(x, 1)  dg[:, k, i, j] = d_k g_ij
    analytic_derivatives(x, 2)  (dg, ddg), ddg[:, k, l, i, j] = d_k d_l g_ij

Finite-difference derivatives are taken from `deviation(x) = g - delta`,
which every family computes without cancellation at large |x|.
"""

from __future__ import annotations

import json
from functools import lru_cache

import numpy as np

from afmass import settings
from afmass.errors import (
    AnalyticDerivativesUnavailable,
    NonPositiveConformalFactor,
    StepTooLarge,
)
from afmass.models import MetricSpec
from afmass.surfaces import ConicalSurface
from afmass.utils.quadrature import unit_sphere_area


def _radii(x: np.ndarray) -> np.ndarray:
    return np.sqrt(np.einsum("...i,...i->...", x, x))


def _outer(x: np.ndarray) -> np.ndarray:
    return np.einsum("...i,...j->...ij", x, x)


def _identity(count: int, n: int) -> np.ndarray:
    return np.broadcast_to(np.eye(n), (count, n, n))


class MetricFamily:
    """Base class of all families.

    Attributes:
        n: int - Dimension.
        inner_radius: float - Radius of the excluded ball of the chart.
        singular_origin: bool - The origin is not a chart point.
        decay_order: float | None - Decay order of g - delta.
        asymptotically_schwarzschild: bool - Declared asymptotic form.
        compact_scalar_support: bool - Scalar curvature vanishes outside
            a bounded region of the chart.
        known_mass: float | None - Closed-form ADM mass when available.
        asymptotic_scale: float - c with g -> c delta at infinity.
        has_analytic: bool - Closed-form derivatives are implemented.
        breakpoints: tuple - Radii where radial quadrature panels split.
    """

    inner_radius: float = 0.0
    singular_origin: bool = False
    decay_order: float | None = None
    asymptotically_schwarzschild: bool = False
    compact_scalar_support: bool = False
    known_mass: float | None = None
    asymptotic_scale: float = 1.0
    has_analytic: bool = False
    breakpoints: tuple = ()

    def __init__(self, n: int):
        self.n = n

    def deviation(self, x: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def metric(self, x: np.ndarray) -> np.ndarray:
        return self.deviation(x) + np.eye(self.n)

    def excluded(self, x: np.ndarray) -> np.ndarray:
        """Mask of points outside the chart."""
        r = _radii(x)
        mask = r < self.inner_radius * (1.0 - 1e-12)
        if self.singular_origin:
            mask |= r == 0.0
        return mask

    def analytic_derivatives(self, x: np.ndarray, order: int):
        raise AnalyticDerivativesUnavailable(
            f"{type(self).__name__} has no closed-form derivatives"
        )

    def fd_derivatives(
        self, x: np.ndarray, order: int, step: float | None = None
    ):
        """Second-order central differences of the deviation."""
        n = self.n
        count = x.shape[0]
        if step is None:
            eps = np.finfo(float).eps
            h = eps**settings.FD_STEP_EXPONENT * np.maximum(1.0, _radii(x))
        else:
            h = np.full(count, float(step))
        shifts = h[:, None, None] * np.eye(n)[None, :, :]

        def dev(points):
            if np.any(self.excluded(points)):
                raise StepTooLarge(
                    "finite-difference stencil leaves the chart"
                )
            return self.deviation(points)

        plus = [dev(x + shifts[:, k]) for k in range(n)]
        minus = [dev(x - shifts[:, k]) for k in range(n)]
        hh = h[:, None, None]
        dg = np.stack(
            [(plus[k] - minus[k]) / (2 * hh) for k in range(n)], axis=1
        )
        if order == 1:
            return dg

        center = dev(x)
        ddg = np.empty((count, n, n, n, n))
        for k in range(n):
            ddg[:, k, k] = (plus[k] - 2 * center + minus[k]) / hh**2
            for m in range(k + 1, n):
                pp = dev(x + shifts[:, k] + shifts[:, m])
                pm = dev(x + shifts[:, k] - shifts[:, m])
                mp = dev(x - shifts[:, k] + shifts[:, m])
                mm = dev(x - shifts[:, k] - shifts[:, m])
                mixed = (pp - pm - mp + mm) / (4 * hh**2)
                ddg[:, k, m] = mixed
                ddg[:, m, k] = mixed
        return dg, ddg


class EuclideanFamily(MetricFamily):
    asymptotically_schwarzschild = True
    compact_scalar_support = True
    known_mass = 0.0
    has_analytic = True

    def deviation(self, x):
        return np.zeros((x.shape[0], self.n, self.n))

    def analytic_derivatives(self, x, order):
        n = self.n
        dg = np.zeros((x.shape[0], n, n, n))
        if order == 1:
            return dg
        return dg, np.zeros((x.shape[0], n, n, n, n))


class PotentialFactor:
    """v = U - 1 = a |x|^{2-n} + d.x |x|^{-n} + b (1 + |x|^2/s^2)^{-(n-2)/2}.

    The monopole and dipole terms are harmonic; the bubble term is smooth
    at the origin with Delta v < 0 for b > 0.
    """

    def __init__(self, n, a=0.0, dipole=None, bubble=0.0, bubble_scale=1.0):
        self.n = n
        self.a = float(a)
        self.dipole = (
            np.zeros(n) if dipole is None else np.asarray(dipole, float)
        )
        self.bubble = float(bubble)
        self.bubble_scale = float(bubble_scale)
        self.singular_origin = bool(self.a or np.any(self.dipole))
        self.breakpoints = ()

    def _radial_terms(self, r):
        """Returns v, v'/r and (v'' - v'/r)/r^2 of the radial part."""
        n = self.n
        v = np.zeros_like(r)
        d1r = np.zeros_like(r)
        c2 = np.zeros_like(r)
        if self.a:
            v += self.a * r ** (2 - n)
            d1r += -(n - 2) * self.a * r ** (-n)
            c2 += n * (n - 2) * self.a * r ** (-n - 2)
        if self.bubble:
            k = (n - 2) / 2.0
            s2 = self.bubble_scale**2
            t = 1.0 + r * r / s2
            v += self.bubble * t**-k
            d1r += -2 * k * self.bubble * t ** (-k - 1) / s2
            c2 += 4 * k * (k + 1) * self.bubble * t ** (-k - 2) / s2**2
        return v, d1r, c2

    def value(self, x):
        r = _radii(x)
        v, _, _ = self._radial_terms(r)
        if np.any(self.dipole):
            v = v + (x @ self.dipole) * r ** (-self.n)
        return v

    def gradient(self, x):
        r = _radii(x)
        _, d1r, _ = self._radial_terms(r)
        grad = d1r[:, None] * x
        if np.any(self.dipole):
            n = self.n
            dx = x @ self.dipole
            grad = grad + (
                self.dipole[None, :] * r[:, None] ** (-n)
                - n * (dx * r ** (-n - 2))[:, None] * x
            )
        return grad

    def hessian(self, x):
        r = _radii(x)
        n = self.n
        _, d1r, c2 = self._radial_terms(r)
        hess = d1r[:, None, None] * np.eye(n) + c2[:, None, None] * _outer(x)
        if np.any(self.dipole):
            dx = x @ self.dipole
            cross = np.einsum("k,...l->...kl", self.dipole, x)
            hess = hess + (
                -n
                * r[:, None, None] ** (-n - 2)
                * (cross + np.swapaxes(cross, 1, 2))
                - n * (dx * r ** (-n - 2))[:, None, None] * np.eye(n)
                + n * (n + 2) * (dx * r ** (-n - 4))[:, None, None] * _outer(x)
            )
        return hess


class ConformalFamily(MetricFamily):
    """g = U^{4/(n-2)} delta with U = 1 + v from a conformal factor."""

    has_analytic = True
    asymptotically_schwarzschild = True

    def __init__(
        self,
        n,
        factor,
        inner_radius=0.0,
        known_mass=None,
        decay_order=None,
        compact_scalar_support=False,
    ):
        super().__init__(n)
        self.factor = factor
        self.power = 4.0 / (n - 2)
        self.inner_radius = float(inner_radius)
        self.singular_origin = factor.singular_origin
        self.known_mass = known_mass
        self.decay_order = decay_order
        self.compact_scalar_support = compact_scalar_support
        self.breakpoints = tuple(factor.breakpoints)

    def _u(self, x):
        v = self.factor.value(x)
        if np.any(1.0 + v <= 0):
            raise NonPositiveConformalFactor(
                "conformal factor U is not positive at a chart point"
            )
        return v

    def deviation(self, x):
        v = self._u(x)
        w = np.expm1(self.power * np.log1p(v))
        return w[:, None, None] * np.eye(self.n)

    def analytic_derivatives(self, x, order):
        n = self.n
        p = self.power
        u = 1.0 + self._u(x)
        grad = self.factor.gradient(x)
        coef = p * u ** (p - 1)
        eye = np.eye(n)
        dg = np.einsum("...k,ij->...kij", coef[:, None] * grad, eye)
        if order == 1:
            return dg
        hess = self.factor.hessian(x)
        inner = hess + (p - 1) * _outer(grad) / u[:, None, None]
        ddg = np.einsum(
            "...kl,ij->...klij", coef[:, None, None] * inner, eye
        )
        return dg, ddg


class AxisBumpPerturbation:
    """h_ij = c E_ij f(x) with f = x_a^2 |x|^{-(n+1)} = O(|x|^{1-n})."""

    def __init__(self, n, amplitude, tensor=None, axis=0):
        self.n = n
        self.c = float(amplitude)
        tensor = np.eye(n) if tensor is None else np.asarray(tensor, float)
        self.tensor = 0.5 * (tensor + tensor.T)
        self.axis = axis

    def _f(self, x, order):
        n, a = self.n, self.axis
        r = _radii(x)
        xa = x[:, a]
        ea = np.zeros(n)
        ea[a] = 1.0
        f = xa**2 * r ** (-n - 1)
        if order == 0:
            return f
        df = (
            2 * (xa * r ** (-n - 1))[:, None] * ea
            - (n + 1) * (xa**2 * r ** (-n - 3))[:, None] * x
        )
        if order == 1:
            return f, df
        eaxl = np.einsum("k,...l->...kl", ea, x)
        ddf = (
            2 * r[:, None, None] ** (-n - 1) * np.outer(ea, ea)
            - 2 * (n + 1) * (xa * r ** (-n - 3))[:, None, None]
            * (eaxl + np.swapaxes(eaxl, 1, 2))
            - (n + 1) * (xa**2 * r ** (-n - 3))[:, None, None] * np.eye(n)
            + (n + 1) * (n + 3) * (xa**2 * r ** (-n - 5))[:, None, None]
            * _outer(x)
        )
        return f, df, ddf

    def value(self, x):
        return self.c * np.einsum("...,ij->...ij", self._f(x, 0), self.tensor)

    def derivatives(self, x, order):
        if order == 1:
            _, df = self._f(x, 1)
            return self.c * np.einsum("...k,ij->...kij", df, self.tensor)
        _, df, ddf = self._f(x, 2)
        dh = self.c * np.einsum("...k,ij->...kij", df, self.tensor)
        ddh = self.c * np.einsum("...kl,ij->...klij", ddf, self.tensor)
        return dh, ddh


class PerturbedFamily(MetricFamily):
    """Schwarzschild plus a perturbation h decaying like |x|^{1-n}."""

    has_analytic = True
    asymptotically_schwarzschild = True

    def __init__(self, base: ConformalFamily, perturbation):
        super().__init__(base.n)
        self.base = base
        self.perturbation = perturbation
        self.inner_radius = base.inner_radius
        self.singular_origin = base.singular_origin
        self.known_mass = base.known_mass
        self.decay_order = base.decay_order

    def deviation(self, x):
        return self.base.deviation(x) + self.perturbation.value(x)

    def analytic_derivatives(self, x, order):
        if order == 1:
            return self.base.analytic_derivatives(
                x, 1
            ) + self.perturbation.derivatives(x, 1)
        dg, ddg = self.base.analytic_derivatives(x, 2)
        dh, ddh = self.perturbation.derivatives(x, 2)
        return dg + dh, ddg + ddh


def _projector_derivatives(x):
    """First and second derivatives of P = x x^T / |x|^2."""
    n = x.shape[1]
    r2 = np.einsum("...i,...i->...", x, x)
    eye = np.eye(n)
    dx = np.einsum("ik,...j->...kij", eye, x)  # delta_ik x_j
    sym = dx + np.swapaxes(dx, 2, 3)  # delta_ik x_j + x_i delta_jk
    xxx = np.einsum("...i,...j,...k->...kij", x, x, x)
    r2_4 = r2[:, None, None, None]
    dp = sym / r2_4 - 2 * xxx / r2_4**2

    dd = np.einsum("ik,jl->klij", eye, eye)
    dd = dd + np.einsum("il,jk->klij", eye, eye)
    term_a = dd[None] / r2[:, None, None, None, None]
    term_b = (
        -2 * np.einsum("...kij,...l->...klij", sym, x)
        / r2[:, None, None, None, None] ** 2
    )
    xx = np.einsum("...i,...j->...ij", x, x)
    term_c = (
        -2
        * (
            np.einsum("il,...jk->...klij", eye, xx)
            + np.einsum("jl,...ik->...klij", eye, xx)
            + np.einsum("kl,...ij->...klij", eye, xx)
        )
        / r2[:, None, None, None, None] ** 2
    )
    term_d = (
        8
        * np.einsum("...i,...j,...k,...l->...klij", x, x, x, x)
        / r2[:, None, None, None, None] ** 3
    )
    return dp, term_a + term_b + term_c + term_d


class ConeFamily(MetricFamily):
    """Cartesian form of dr^2 + s(r, theta)^2 dtheta^2:
    g = I + (s^2/r^2 - 1) t t^T with t the unit angular direction."""

    decay_order = 1.0

    def __init__(self, surface: ConicalSurface):
        super().__init__(2)
        self.surface = surface
        self.singular_origin = surface.cap == "none"
        self.has_analytic = surface.is_pure_cone
        self.breakpoints = tuple(surface.junctions)

    def deviation(self, x):
        r = _radii(x)
        theta = np.arctan2(x[:, 1], x[:, 0])
        safe = np.where(r > 0, r, 1.0)
        s, _, _, _ = self.surface.shape(safe, theta)
        ratio = np.where(r > 0, (s / safe) ** 2 - 1.0, 0.0)
        t = np.stack([-x[:, 1], x[:, 0]], axis=-1) / safe[:, None]
        return ratio[:, None, None] * _outer(t)

    def analytic_derivatives(self, x, order):
        if not self.has_analytic:
            return super().analytic_derivatives(x, order)
        # pure cone: g = alpha^2 I + (1 - alpha^2) P
        dp, ddp = _projector_derivatives(x)
        k = 1.0 - self.surface.alpha**2
        if order == 1:
            return k * dp
        return k * dp, k * ddp


class ScaledFamily(MetricFamily):
    """lambda^2 g in the chart of g."""

    def __init__(self, base: MetricFamily, lam: float):
        super().__init__(base.n)
        self.base = base
        self.lam2 = float(lam) ** 2
        self.inner_radius = base.inner_radius
        self.singular_origin = base.singular_origin
        self.decay_order = base.decay_order
        self.asymptotically_schwarzschild = base.asymptotically_schwarzschild
        self.compact_scalar_support = base.compact_scalar_support
        self.asymptotic_scale = self.lam2 * base.asymptotic_scale
        self.has_analytic = base.has_analytic
        self.breakpoints = base.breakpoints
        if base.known_mass is not None:
            self.known_mass = float(lam) ** (base.n - 2) * base.known_mass

    def excluded(self, x):
        return self.base.excluded(x)

    def deviation(self, x):
        return self.lam2 * self.base.deviation(x) + (self.lam2 - 1.0) * np.eye(
            self.n
        )

    def analytic_derivatives(self, x, order):
        if order == 1:
            return self.lam2 * self.base.analytic_derivatives(x, 1)
        dg, ddg = self.base.analytic_derivatives(x, 2)
        return self.lam2 * dg, self.lam2 * ddg


class TranslatedFamily(MetricFamily):
    """g(x + offset); the chart is recentered at -offset."""

    def __init__(self, base: MetricFamily, offset):
        super().__init__(base.n)
        self.base = base
        self.offset = np.asarray(offset, dtype=float)
        shift = float(np.linalg.norm(self.offset))
        if base.inner_radius > 0 or base.singular_origin:
            self.inner_radius = base.inner_radius + shift
        self.decay_order = base.decay_order
        self.asymptotically_schwarzschild = base.asymptotically_schwarzschild
        self.compact_scalar_support = base.compact_scalar_support
        self.known_mass = base.known_mass
        self.asymptotic_scale = base.asymptotic_scale
        self.has_analytic = base.has_analytic

    def excluded(self, x):
        return self.base.excluded(x + self.offset)

    def deviation(self, x):
        return self.base.deviation(x + self.offset)

    def analytic_derivatives(self, x, order):
        return self.base.analytic_derivatives(x + self.offset, order)


def _schwarzschild(n: int, params: dict) -> ConformalFamily:
    m = float(params.get("m", 1.0))
    horizon = (abs(m) / 2.0) ** (1.0 / (n - 2))
    default_inner = horizon if m >= 0 else 2.0 * horizon
    return ConformalFamily(
        n,
        PotentialFactor(n, a=m / 2.0),
        inner_radius=params.get("inner_radius", default_inner),
        known_mass=m,
        decay_order=float(n - 2) if m else None,
        compact_scalar_support=True,
    )


def _conformally_flat(n: int, params: dict) -> ConformalFamily:
    a = float(params.get("a", 0.0))
    dipole = params.get("dipole")
    bubble = float(params.get("bubble", 0.0))
    scale = float(params.get("bubble_scale", 1.0))
    factor = PotentialFactor(n, a, dipole, bubble, scale)
    # negative terms of U - 1 stay above -1/4 each outside default_inner
    strength = 0.0 if dipole is None else float(np.linalg.norm(dipole))
    default_inner = max(
        (abs(a) if a > 0 else 4.0 * abs(a)) ** (1.0 / (n - 2)),
        (4.0 * strength) ** (1.0 / (n - 1)),
    )
    monopole = a + bubble * scale ** (n - 2)
    if monopole:
        decay = float(n - 2)
    elif dipole is not None and np.any(dipole):
        decay = float(n - 1)
    else:
        decay = None
    return ConformalFamily(
        n,
        factor,
        inner_radius=params.get("inner_radius", default_inner),
        known_mass=2.0 * monopole,
        decay_order=decay,
        compact_scalar_support=not bubble,
    )


def _shell(n: int, params: dict) -> ConformalFamily:
    from afmass.shells import ShellFactor, ShellProfile, solve_shell_potential

    profile = ShellProfile.model_validate(params.get("profile", {}))
    i = float(params.get("i", 1.0))
    grid_size = int(params.get("grid_size", settings.SHELL_GRID_SIZE))
    potential = solve_shell_potential(n, profile, i, grid_size=grid_size)
    return ConformalFamily(
        n,
        ShellFactor(potential),
        inner_radius=0.0,
        known_mass=2.0 / ((n - 2) * unit_sphere_area(n)),
        decay_order=float(n - 2),
        compact_scalar_support=True,
    )


def _build(spec: MetricSpec) -> MetricFamily:
    n = spec.n
    params = spec.params
    if spec.family == "euclidean":
        return EuclideanFamily(n)
    if spec.family == "schwarzschild":
        return _schwarzschild(n, params)
    if spec.family == "conformally_flat":
        return _conformally_flat(n, params)
    if spec.family == "shell_conformal":
        return _shell(n, params)
    if spec.family == "asymptotically_schwarzschild":
        base = _schwarzschild(n, params)
        bump = AxisBumpPerturbation(
            n,
            params.get("amplitude", 0.0),
            params.get("tensor"),
            params.get("axis", 0),
        )
        family = PerturbedFamily(base, bump)
        family.compact_scalar_support = not params.get("amplitude", 0.0)
        return family
    if spec.family == "cone2d":
        return ConeFamily(ConicalSurface.model_validate(params))
    if spec.family == "scaled":
        return ScaledFamily(build_family(spec.base), params["lambda"])
    if spec.family == "translated":
        return TranslatedFamily(build_family(spec.base), params["offset"])
    raise ValueError(f"unknown family {spec.family}")  # pragma: no cover


@lru_cache(maxsize=256)
def _cached(key: str) -> MetricFamily:
    return _build(MetricSpec.model_validate(json.loads(key)))


def build_family(spec: MetricSpec) -> MetricFamily:
    """Family evaluator for a spec; evaluators are cached per spec."""
    return _cached(spec.model_dump_json())


def decay_exponent(family: MetricFamily) -> float:
    """Exponent p of the c0 + c1 r**-p flux model."""
    if family.decay_order is None:
        return 1.0
    return float(min(family.n - 2, family.decay_order)) or 1.0


def mass_normalization(n: int) -> float:
    return 1.0 / (2.0 * (n - 1) * unit_sphere_area(n))


__all__ = [
    "MetricFamily",
    "build_family",
    "decay_exponent",
    "mass_normalization",
]
