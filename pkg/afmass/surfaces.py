"""Asymptotically conical surfaces.

A surface is written in polar coordinates as dr^2 + s(r, theta)^2 dtheta^2
with s = f(r) * sqrt(1 + p(r, theta)). The radial profile f is the cone
alpha * r outside a compact cap and p is an optional angular perturbation
decaying like r**-tau.
"""

from __future__ import annotations

import math
from typing import Literal

import numpy as np
from pydantic import BaseModel, Field, field_validator, model_validator
from scipy.special import erf

CapModel = Literal["none", "flat", "round", "smooth"]


class ConePerturbation(BaseModel):
    """p(r, theta) = amplitude * w(r) * cos(mode * theta) with
    w(r) = r^2 (1 + r^2)^-(1 + tau/2), so that p = O(r**-tau)."""

    amplitude: float
    tau: float = Field(default=1.0, gt=0)
    mode: int = Field(default=2, ge=0)

    @field_validator("amplitude")
    def validate_amplitude(cls, v: float) -> float:
        # max of w is below 1, so |amplitude| < 1 keeps 1 + p > 0
        if not abs(v) < 1:
            raise ValueError("perturbation amplitude must satisfy |c| < 1")
        return v

    def weight(self, r):
        beta = 1.0 + self.tau / 2.0
        t = 1.0 + r * r
        w = r * r * t**-beta
        w1 = 2 * r * t**-beta - 2 * beta * r**3 * t ** (-beta - 1)
        w2 = (
            2 * t**-beta
            - 10 * beta * r * r * t ** (-beta - 1)
            + 4 * beta * (beta + 1) * r**4 * t ** (-beta - 2)
        )
        return w, w1, w2

    def evaluate(self, r, theta):
        """Returns p, p_r, p_rr, p_theta."""
        w, w1, w2 = self.weight(r)
        c = self.amplitude * np.cos(self.mode * theta)
        p_theta = -self.amplitude * self.mode * np.sin(self.mode * theta) * w
        return c * w, c * w1, c * w2, p_theta


class ConicalSurface(BaseModel):
    """Asymptotically conical surface with cone angle 2 pi alpha.

    Attributes:
        alpha: float - Cone parameter, the model metric is dr^2 + alpha^2
            r^2 dtheta^2.
        cap: CapModel - Filling of {r <= r_cap}: "none" keeps the cone tip,
            "flat" glues a Euclidean disk along a kink, "round" a spherical
            cap of radius r_cap / arccos(alpha), and "smooth" uses
            f = alpha r + (1 - alpha) r_cap (sqrt(pi)/2) erf(r / r_cap).
        r_cap: float - Size of the cap.
        chi: int - Declared Euler characteristic of the filled surface.
        perturbation: ConePerturbation | None - Angular perturbation.

    Raises:
        ValueError - Round caps need alpha < 1.
    """

    alpha: float = Field(gt=0)
    cap: CapModel = "smooth"
    r_cap: float = Field(default=1.0, gt=0)
    chi: int = 1
    perturbation: ConePerturbation | None = None

    @model_validator(mode="after")
    def check_cap(self) -> ConicalSurface:
        if self.cap == "round" and not self.alpha < 1:
            raise ValueError("a round cap needs alpha < 1")
        return self

    @property
    def is_pure_cone(self) -> bool:
        return self.cap == "none" and self.perturbation is None

    @property
    def decay_order(self) -> float:
        if self.perturbation is not None:
            return min(1.0, self.perturbation.tau)
        return 1.0

    @property
    def junctions(self) -> list[float]:
        """Radii where the profile is not smooth."""
        return [self.r_cap] if self.cap in ("flat", "round") else []

    @property
    def label(self) -> str:
        extra = "" if self.perturbation is None else ", perturbed"
        return f"cone(alpha={self.alpha}, cap={self.cap}{extra})"

    def profile(self, r, side: str = "right"):
        """Returns f, f', f'' at radii r.

        At a junction radius `side` picks the branch ("left" is the cap).
        """
        r = np.asarray(r, dtype=float)
        a = self.alpha
        rc = self.r_cap
        if self.cap == "none":
            return a * r, np.full_like(r, a), np.zeros_like(r)
        if self.cap == "smooth":
            gauss = np.exp(-((r / rc) ** 2))
            f = a * r + (1 - a) * rc * (math.sqrt(math.pi) / 2) * erf(r / rc)
            f1 = a + (1 - a) * gauss
            f2 = -2 * (1 - a) * (r / rc**2) * gauss
            return f, f1, f2

        inside = r < rc if side == "right" else r <= rc
        if self.cap == "flat":
            f = np.where(inside, r, rc + a * (r - rc))
            f1 = np.where(inside, 1.0, a)
            return f, f1, np.zeros_like(r)

        radius = rc / math.acos(a)
        f = np.where(
            inside,
            radius * np.sin(r / radius),
            radius * math.sin(rc / radius) + a * (r - rc),
        )
        f1 = np.where(inside, np.cos(r / radius), a)
        f2 = np.where(inside, -np.sin(r / radius) / radius, 0.0)
        return f, f1, f2

    def shape(self, r, theta, side: str = "right"):
        """Returns s, s_r, s_rr, s_theta at (r, theta)."""
        r, theta = np.broadcast_arrays(
            np.asarray(r, dtype=float), np.asarray(theta, dtype=float)
        )
        f, f1, f2 = self.profile(r, side=side)
        if self.perturbation is None:
            return f, f1, f2, np.zeros_like(f)

        p, p_r, p_rr, p_theta = self.perturbation.evaluate(r, theta)
        sigma = np.sqrt(1.0 + p)
        sigma_r = p_r / (2 * sigma)
        sigma_rr = p_rr / (2 * sigma) - p_r**2 / (4 * sigma**3)
        sigma_theta = p_theta / (2 * sigma)
        s = f * sigma
        s_r = f1 * sigma + f * sigma_r
        s_rr = f2 * sigma + 2 * f1 * sigma_r + f * sigma_rr
        return s, s_r, s_rr, f * sigma_theta

    def scaled(self, lam: float) -> ConicalSurface:
        """The surface (M, lam^2 g) written again in polar form.

        Cone angle and cap shape are scale invariant, only r_cap grows.
        """
        if self.perturbation is not None:
            raise ValueError("rescaling a perturbed surface is not supported")
        return self.model_copy(update={"r_cap": self.r_cap * lam})

    def metric_spec(self):
        from afmass.models import MetricSpec

        return MetricSpec(
            n=2,
            family="cone2d",
            params=self.model_dump(),
            derivative_mode="analytic" if self.is_pure_cone else "fd",
        )

    @classmethod
    def plane(cls) -> ConicalSurface:
        return cls(alpha=1.0, cap="flat")
