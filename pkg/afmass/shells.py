"""Shells of matter escaping to infinity.

For a radial density rho_i(x) = i^-n rho(x / i) supported in the annulus
i s0 <= |x| <= i s1 with total integral 1, the potential v_i solves

    (r^{n-1} v')' = -r^{n-1} rho_i,   v'(0) = 0,   v(inf) = 0,

so that u_i = 1 + v_i is the conformal factor of g_i = u_i^{4/(n-2)} delta,
whose scalar curvature is a positive multiple of rho_i. The solution is the
closed-form integral

    v'(r) = -r^{1-n} E(r),  E(r) = int_0^r s^{n-1} rho_i(s) ds,

and v = a r^{2-n} outside the support with a = 1/((n-2) omega).
"""

from __future__ import annotations

import json
from functools import lru_cache
from typing import Tuple

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, model_validator

from afmass import settings
from afmass.errors import GridTooCoarse, NonPositiveU
from afmass.models import MetricSpec
from afmass.utils.log import get_logger
from afmass.utils.quadrature import gauss_legendre, unit_sphere_area

log = get_logger()


class ShellProfile(BaseModel):
    """Bump (1 - t^2)^power with t mapping the support onto [-1, 1].

    The default is (1 - (4(s - 3/4))^2)^3 on [1/2, 1].
    """

    model_config = ConfigDict(frozen=True)

    power: int = Field(default=3, ge=1)
    support: Tuple[float, float] = (0.5, 1.0)

    @model_validator(mode="after")
    def check_support(self) -> ShellProfile:
        s0, s1 = self.support
        if not 0.5 <= s0 < s1 <= 1.0:
            raise ValueError("shell support must lie inside [1/2, 1]")
        return self

    def raw(self, s):
        s0, s1 = self.support
        t = (2 * np.asarray(s, dtype=float) - (s0 + s1)) / (s1 - s0)
        return np.where(np.abs(t) < 1, (1 - t * t) ** self.power, 0.0)

    def normalization(self, n: int) -> float:
        """C with int_{R^n} C raw(|x|) dx = 1."""
        s0, s1 = self.support
        nodes, weights = gauss_legendre(s0, s1, self.power + n)
        moment = float(np.dot(weights, nodes ** (n - 1) * self.raw(nodes)))
        return 1.0 / (unit_sphere_area(n) * moment)


class RadialPotential:
    """Solved potential v_i with its first two radial derivatives.

    `grid` holds the nodes across the support where v is tabulated; values
    in between are integrated from the next grid node above.
    """

    def __init__(self, n: int, profile: ShellProfile, i: float, grid):
        self.n = n
        self.profile = profile
        self.i = float(i)
        self.constant = profile.normalization(n)
        self.inner = self.i * profile.support[0]
        self.outer = self.i * profile.support[1]
        self.omega = unit_sphere_area(n)
        self.tail_coefficient = 1.0 / ((n - 2) * self.omega)
        self.grid = np.asarray(grid, dtype=float)
        self._order = profile.power + n
        self.grid_values = self._tabulate()

    @property
    def breakpoints(self) -> tuple:
        return tuple(np.linspace(self.inner, self.outer, 5).tolist())

    def density(self, r):
        r = np.asarray(r, dtype=float)
        scale = self.constant * self.i ** (-self.n)
        return scale * self.profile.raw(r / self.i)

    def enclosed(self, r):
        """E(r) = int_0^r s^{n-1} rho_i(s) ds, exact for the polynomial
        profile."""
        r = np.asarray(r, dtype=float)
        top = np.asarray(np.clip(r, self.inner, self.outer))
        t, w = np.polynomial.legendre.leggauss(self._order)
        half = 0.5 * (top - self.inner)
        s = self.inner + half[..., None] * (t + 1.0)
        integrand = s ** (self.n - 1) * self.density(s)
        return np.sum(half[..., None] * w * integrand, axis=-1)

    def first(self, r):
        r = np.asarray(r, dtype=float)
        safe = np.where(r > 0, r, 1.0)
        return np.where(r > self.inner, -safe ** (1 - self.n), 0.0) * (
            self.enclosed(r)
        )

    def first_over_r(self, r):
        r = np.asarray(r, dtype=float)
        safe = np.where(r > 0, r, 1.0)
        return np.where(r > self.inner, -(safe ** (-self.n)), 0.0) * (
            self.enclosed(r)
        )

    def second(self, r):
        r = np.asarray(r, dtype=float)
        safe = np.where(r > 0, r, 1.0)
        outer = np.where(r > self.inner, (self.n - 1) * safe ** (-self.n), 0.0)
        return -self.density(r) + outer * self.enclosed(r)

    def _integrate_first(self, lower, upper):
        """int_lower^upper v'(s) ds, elementwise."""
        order = settings.SHELL_CELL_ORDER
        t, w = np.polynomial.legendre.leggauss(order)
        lower = np.asarray(lower, dtype=float)
        half = np.asarray(0.5 * (upper - lower))
        s = lower[..., None] + half[..., None] * (t + 1.0)
        return np.sum(half[..., None] * w * self.first(s), axis=-1)

    def _tabulate(self) -> np.ndarray:
        values = np.empty_like(self.grid)
        values[-1] = self.tail_coefficient * self.grid[-1] ** (2 - self.n)
        steps = self._integrate_first(self.grid[:-1], self.grid[1:])
        # integrate inwards from the outer edge of the support
        values[:-1] = values[-1] - np.cumsum(steps[::-1])[::-1]
        return values

    def value(self, r):
        r = np.asarray(r, dtype=float)
        safe = np.where(r > 0, r, 1.0)
        tail = self.tail_coefficient * safe ** (2 - self.n)
        inside = np.clip(r, self.inner, self.outer)
        index = np.clip(
            np.searchsorted(self.grid, inside), 0, len(self.grid) - 1
        )
        upper = self.grid[index]
        between = self.grid_values[index] - self._integrate_first(
            inside, upper
        )
        return np.where(r >= self.outer, tail, between)


@lru_cache(maxsize=64)
def _solve(n: int, profile_json: str, i: float, grid_size: int):
    profile = ShellProfile.model_validate(json.loads(profile_json))
    inner, outer = (i * s for s in profile.support)
    grid = np.linspace(inner, outer, grid_size)
    log.debug("solving shell potential n=%d i=%g on %d nodes", n, i, grid_size)
    return RadialPotential(n, profile, i, grid)


def solve_shell_potential(
    n: int,
    profile: ShellProfile | None = None,
    i: float = 1.0,
    grid_size: int = settings.SHELL_GRID_SIZE,
) -> RadialPotential:
    """Potential v_i of the i-th shell.

    Raises:
        GridTooCoarse - fewer than SHELL_MIN_NODES nodes across the support.
    """
    if n < 3:
        raise ValueError("shells need n >= 3")
    if grid_size < settings.SHELL_MIN_NODES:
        raise GridTooCoarse(
            f"{grid_size} nodes across the shell support, "
            f"at least {settings.SHELL_MIN_NODES} required"
        )
    profile = profile or ShellProfile()
    return _solve(n, profile.model_dump_json(), float(i), grid_size)


class ShellFactor:
    """Conformal factor U = 1 + v_i(|x|) for ConformalFamily."""

    singular_origin = False

    def __init__(self, potential: RadialPotential):
        self.potential = potential
        self.breakpoints = potential.breakpoints

    def value(self, x):
        return self.potential.value(np.linalg.norm(x, axis=-1))

    def gradient(self, x):
        r = np.linalg.norm(x, axis=-1)
        return self.potential.first_over_r(r)[:, None] * x

    def hessian(self, x):
        r = np.linalg.norm(x, axis=-1)
        n = x.shape[-1]
        d1r = self.potential.first_over_r(r)
        safe = np.where(r > 0, r, 1.0)
        c2 = np.where(
            r > self.potential.inner,
            (self.potential.second(r) - d1r) / safe**2,
            0.0,
        )
        return d1r[:, None, None] * np.eye(n) + c2[:, None, None] * (
            np.einsum("...i,...j->...ij", x, x)
        )


class ShellFamily(BaseModel):
    """The i-th member g_i = u_i^{4/(n-2)} delta of the shell sequence."""

    n: int = Field(default=3, ge=3)
    i: float = Field(default=1.0, ge=1)
    profile: ShellProfile = Field(default_factory=ShellProfile)
    grid_size: int = settings.SHELL_GRID_SIZE

    def potential(self) -> RadialPotential:
        return solve_shell_potential(
            self.n, self.profile, self.i, grid_size=self.grid_size
        )

    def metric_spec(self) -> MetricSpec:
        return MetricSpec(
            n=self.n,
            family="shell_conformal",
            params={
                "i": self.i,
                "profile": self.profile.model_dump(mode="json"),
                "grid_size": self.grid_size,
            },
        )


def shell_metric(family: ShellFamily) -> MetricSpec:
    """Conformally flat spec of the i-th shell.

    Raises:
        NonPositiveU - u_i <= 0 at a grid node.
    """
    potential = family.potential()
    u = 1.0 + potential.grid_values
    if np.any(u <= 0):
        raise NonPositiveU(f"shell i={family.i}: u_i is not positive")
    return family.metric_spec()


def newtonian_mass(
    profile: ShellProfile | None = None, n: int = 3, i: float = 1.0
) -> float:
    """Total matter int rho_i dx, equal to 1 for every i."""
    potential = solve_shell_potential(n, profile, i)
    return float(potential.omega * potential.enclosed(potential.outer))
