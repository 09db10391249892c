"""Models module.

Declarative inputs (metric specs, run and experiment configurations) and the
reports every operation returns. All of them serialize to JSON through
pydantic; field names are part of the file formats.
"""

from __future__ import annotations

import math
from typing import Any, ClassVar, Literal

import numpy as np
from pydantic import (
    BaseModel,
    ConfigDict,
    Field,
    field_validator,
    model_validator,
)

from afmass import settings
from afmass.surfaces import ConicalSurface

Family = Literal[
    "euclidean",
    "schwarzschild",
    "conformally_flat",
    "asymptotically_schwarzschild",
    "cone2d",
    "scaled",
    "translated",
    "shell_conformal",
]
CONFORMAL_FAMILIES = (
    "schwarzschild",
    "conformally_flat",
    "asymptotically_schwarzschild",
    "shell_conformal",
)
Command = Literal[
    "adm-mass",
    "fg-profile",
    "weighted-mass",
    "sequence",
    "cone-angle",
    "cone-sequence",
]


def _check_radii(radii: list[float]) -> list[float]:
    if len(radii) < 3:
        raise ValueError("at least 3 radii are required")
    if any(r <= 0 for r in radii):
        raise ValueError("radii must be positive")
    if any(b <= a for a, b in zip(radii, radii[1:])):
        raise ValueError("radii must be strictly increasing")
    return radii


class MetricSpec(BaseModel):
    """Declarative description of a metric in one asymptotically flat chart.

    Attributes:
        n: int - Dimension of the manifold.
        family: Family - Metric family name.
        params: dict - Family parameters. Wrapper families ("scaled",
            "translated") carry their base spec under params["base"].
        derivative_mode: str - "analytic" or "fd" (central differences).
        fd_step: float | None - Fixed finite-difference step; when absent
            the step follows eps**(1/3) * max(1, |x|).

    Raises:
        ValueError - When the parameters do not fit the family.
    """

    model_config = ConfigDict(frozen=True)

    n: int = Field(ge=2)
    family: Family
    params: dict[str, Any] = Field(default_factory=dict)
    derivative_mode: Literal["analytic", "fd"] = "analytic"
    fd_step: float | None = Field(default=None, gt=0)

    @model_validator(mode="after")
    def check_family(self) -> MetricSpec:
        if self.family in CONFORMAL_FAMILIES and self.n < 3:
            raise ValueError(f"family {self.family} needs n >= 3")
        if self.family == "cone2d":
            if self.n != 2:
                raise ValueError("family cone2d is two-dimensional")
            ConicalSurface.model_validate(self.params)
        if self.family in ("scaled", "translated"):
            if self.base.n != self.n:
                raise ValueError("base spec has a different dimension")
        if self.family == "scaled" and not self.params.get("lambda", 0) > 0:
            raise ValueError("scaled family needs lambda > 0")
        if self.family == "translated":
            if len(self.params.get("offset", ())) != self.n:
                raise ValueError("offset must have n components")
        if self.family == "asymptotically_schwarzschild":
            axis = self.params.get("axis", 0)
            if not 0 <= axis < self.n:
                raise ValueError(f"axis {axis} outside 0..{self.n - 1}")
        return self

    @property
    def base(self) -> MetricSpec:
        return MetricSpec.model_validate(self.params["base"])

    @property
    def label(self) -> str:
        if self.family in ("scaled", "translated"):
            extra = self.params.get("lambda", self.params.get("offset"))
            return f"{self.family}({self.base.label}, {extra})"
        shown = {
            k: v for k, v in self.params.items() if not isinstance(v, dict)
        }
        inner = ", ".join(f"{k}={v}" for k, v in sorted(shown.items()))
        return f"{self.family}[n={self.n}]({inner})"

    @classmethod
    def euclidean(cls, n: int) -> MetricSpec:
        return cls(n=n, family="euclidean")

    @classmethod
    def schwarzschild(
        cls, n: int, m: float, inner_radius: float | None = None, **kw
    ) -> MetricSpec:
        params: dict[str, Any] = {"m": m}
        if inner_radius is not None:
            params["inner_radius"] = inner_radius
        return cls(n=n, family="schwarzschild", params=params, **kw)

    @classmethod
    def conformally_flat(
        cls,
        n: int,
        a: float = 0.0,
        dipole: list[float] | None = None,
        bubble: float = 0.0,
        bubble_scale: float = 1.0,
        **kw,
    ) -> MetricSpec:
        params: dict[str, Any] = {"a": a}
        if dipole is not None:
            params["dipole"] = list(dipole)
        if bubble:
            params["bubble"] = bubble
            params["bubble_scale"] = bubble_scale
        return cls(n=n, family="conformally_flat", params=params, **kw)

    @classmethod
    def asymptotically_schwarzschild(
        cls,
        n: int,
        m: float,
        amplitude: float,
        tensor: list[list[float]] | None = None,
        axis: int = 0,
        **kw,
    ) -> MetricSpec:
        params: dict[str, Any] = {"m": m, "amplitude": amplitude, "axis": axis}
        if tensor is not None:
            params["tensor"] = [list(row) for row in tensor]
        return cls(
            n=n, family="asymptotically_schwarzschild", params=params, **kw
        )

    @classmethod
    def cone(cls, surface: ConicalSurface) -> MetricSpec:
        return surface.metric_spec()

    @classmethod
    def scaled(cls, base: MetricSpec, lam: float) -> MetricSpec:
        return cls(
            n=base.n,
            family="scaled",
            params={"base": base.model_dump(), "lambda": float(lam)},
            derivative_mode=base.derivative_mode,
            fd_step=base.fd_step,
        )

    @classmethod
    def translated(cls, base: MetricSpec, offset) -> MetricSpec:
        return cls(
            n=base.n,
            family="translated",
            params={
                "base": base.model_dump(),
                "offset": [float(c) for c in offset],
            },
            derivative_mode=base.derivative_mode,
            fd_step=base.fd_step,
        )


class PointwiseCurvature(BaseModel):
    """Christoffel symbols, Ricci tensor and scalar curvature at points.

    `christoffel[..., k, i, j]` holds Gamma^k_ij.
    """

    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    christoffel: np.ndarray
    ricci: np.ndarray
    scalar: np.ndarray | float


class DecayModel(BaseModel):
    c0: float
    c1: float
    p: float


class MassEstimate(BaseModel):
    """Limit-at-infinity estimate of a mass-like quantity.

    Attributes:
        value: float - Extrapolated value (c0 of the decay model).
        error: float - |last raw value - value| plus the fit residual.
        radii: list[float] - Evaluation radii, strictly increasing.
        raw: list[float] - Quantity evaluated at each radius.
        model: DecayModel - Fitted c0 + c1 r**-p.
    """

    value: float
    error: float = Field(ge=0)
    radii: list[float]
    raw: list[float]
    model: DecayModel

    @field_validator("radii")
    def validate_radii(cls, v: list[float]) -> list[float]:
        return _check_radii(v)

    @field_validator("value")
    def validate_value(cls, v: float) -> float:
        if not math.isfinite(v):
            raise ValueError(f"non-finite estimate: {v}")
        return v

    @model_validator(mode="after")
    def check_lengths(self) -> MassEstimate:
        if len(self.raw) != len(self.radii):
            raise ValueError("raw and radii lengths differ")
        return self


class ConeMassEstimate(MassEstimate):
    """Cone mass from the geodesic-curvature limit, with the Gauss-Bonnet
    estimate and the discrepancy between both when a cap is available."""

    gauss_bonnet_value: float | None = None
    discrepancy: float | None = None


class SphereReport(BaseModel):
    CSV_COLUMNS: ClassVar[tuple[str, ...]] = (
        "r",
        "area",
        "H_min",
        "H_max",
        "maxH2",
        "rho_min",
        "rho_max",
        "q",
    )

    r: float = Field(gt=0)
    area: float = Field(gt=0)
    H_min: float
    H_max: float
    maxH2: float = Field(ge=0)
    rho_min: float
    rho_max: float
    q: int

    @model_validator(mode="after")
    def check_order(self) -> SphereReport:
        if self.H_min > self.H_max or self.rho_min > self.rho_max:
            raise ValueError("extrema out of order")
        return self

    def csv_row(self) -> list:
        return [getattr(self, column) for column in self.CSV_COLUMNS]


class FgResult(BaseModel):
    """Value of F_g on one coordinate sphere.

    `flagged` marks spheres where rho_min <= 0, on which the inequality
    hypothesis fails and the value is recorded but carries no bound.
    """

    CSV_COLUMNS: ClassVar[tuple[str, ...]] = (
        "r",
        "fg",
        "area",
        "maxH2",
        "rho_min",
        "hypothesis_holds",
    )

    r: float
    fg: float
    area: float
    maxH2: float
    rho_min: float
    hypothesis_holds: bool
    flagged: bool = False

    def csv_row(self) -> list:
        return [getattr(self, column) for column in self.CSV_COLUMNS]


class PenroseCheck(BaseModel):
    hypothesis_holds: bool
    hypothesis_margin: float
    fg_value: float
    mass_value: float
    error_budget: float
    inequality_holds: bool


class WeightedNormParams(BaseModel):
    """Grid and weight of a C^k_{-tau} seminorm on {|x| >= inner_radius}."""

    k: int = Field(default=2, ge=0, le=2)
    tau: float = Field(gt=0)
    inner_radius: float = Field(default=1.0, gt=0)
    radii_per_decade: int = Field(
        default=settings.WEIGHTED_RADII_PER_DECADE, ge=1
    )
    decades: float = Field(default=settings.WEIGHTED_DECADES, gt=0)
    q: int = Field(default=settings.WEIGHTED_QUADRATURE, ge=2)

    def radii(self) -> np.ndarray:
        count = int(round(self.decades * self.radii_per_decade)) + 1
        return self.inner_radius * np.logspace(0.0, self.decades, count)


class DivergenceMass(BaseModel):
    """Mass from the divergence-form integral of D(g).

    `core_flux` is the normalized flux through the inner sphere for charts
    with an excluded ball and `tail` the extrapolated mass minus the flux
    through the outer sphere; `value` includes both.
    """

    value: float
    core_flux: float
    volume_integral: float
    tail: float
    outer_radius: float


class DefectReport(BaseModel):
    mass: MassEstimate
    matter_integral: float
    defect: float

    @model_validator(mode="after")
    def check_finite(self) -> DefectReport:
        if not all(
            math.isfinite(v) for v in (self.matter_integral, self.defect)
        ):
            raise ValueError("defect report has non-finite entries")
        return self


class WindowSample(BaseModel):
    """Metric sampled on the cube [-L, L]^n in normalized window
    coordinates, with its first and second derivatives."""

    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    label: str
    center: list[float]
    scale: float
    L: float
    resolution: int
    points: np.ndarray
    g: np.ndarray
    dg: np.ndarray
    ddg: np.ndarray

    @model_validator(mode="after")
    def check_finite(self) -> WindowSample:
        for name in ("g", "dg", "ddg"):
            if not np.all(np.isfinite(getattr(self, name))):
                raise ValueError(f"non-finite window samples in {name}")
        return self


class ExperimentParams(BaseModel):
    """Parameters of a semicontinuity experiment.

    `center` is the blow-up point, `offset_scale` the distance step of
    escaping points (|p_i| = offset_scale * i), and `mass_mode` chooses
    between closed-form family masses and extrapolated ones.
    """

    kind: Literal["blow_up", "escaping", "shells", "constant"]
    n: int = Field(default=3, ge=2)
    indices: list[int] = Field(default_factory=lambda: [1, 2, 4, 8])
    window_L: float = Field(default=settings.WINDOW_L, gt=0)
    resolution: int = Field(default=settings.WINDOW_RESOLUTION, ge=2)
    spec: MetricSpec | None = None
    surface: ConicalSurface | None = None
    center: list[float] | None = None
    offset_scale: float = Field(default=10.0, gt=0)
    mass_mode: Literal["analytic", "numerical"] = "analytic"
    q: int = Field(default=settings.DEFAULT_QUADRATURE, ge=2)
    radii: list[float] | None = None
    tau: float | None = Field(default=None, gt=0)

    @field_validator("indices")
    def validate_indices(cls, v: list[int]) -> list[int]:
        if not v or any(i < 1 for i in v):
            raise ValueError("indices must be a non-empty list of i >= 1")
        if any(b <= a for a, b in zip(v, v[1:])):
            raise ValueError("indices must be strictly increasing")
        return v

    @model_validator(mode="after")
    def check_dimensions(self) -> ExperimentParams:
        if self.spec is not None and self.spec.n != self.n:
            raise ValueError("experiment n differs from spec dimension")
        if self.center is not None and len(self.center) != self.n:
            raise ValueError("center must have n components")
        if self.radii is not None:
            _check_radii(self.radii)
        return self


class ExperimentReport(BaseModel):
    """Masses, limit mass and window distances of a convergence experiment.

    Attributes:
        label: str - Sequence label.
        kind: str - Experiment kind.
        indices: list[int] - Sequence indices.
        masses: list[float] - Mass of each term.
        limit_label: str - Label of the limit space.
        limit_mass: float - Mass of the limit space.
        distances: list[float] - Distance of each term to the limit.
        distance_kind: str - What the distances measure.
        liminf_mass: float - Tail minimum of the masses.
        verdict: bool - liminf_mass >= limit_mass.
        drop: float - liminf_mass - limit_mass.
        drop_unbounded: bool - Masses grow without bound along the sequence.
        fitted_exponent: float | None - Decay exponent fitted to distances.
        nominal_exponent: float | None - Expected decay exponent.
        monotone_from: int | None - Index from which distances never grow.
        matter: list[float] | None - Matter integrals (shells).
        defects: list[float] | None - mass - matter (shells).
        certification: str - What the window distances certify.
    """

    CSV_COLUMNS: ClassVar[tuple[str, ...]] = ("index", "mass", "distance")
    DEFECT_COLUMNS: ClassVar[tuple[str, ...]] = (
        "i",
        "mass",
        "matter",
        "defect",
    )

    label: str
    kind: str
    indices: list[int]
    masses: list[float]
    limit_label: str
    limit_mass: float
    distances: list[float]
    distance_kind: str
    liminf_mass: float
    verdict: bool
    drop: float
    drop_unbounded: bool = False
    fitted_exponent: float | None = None
    nominal_exponent: float | None = None
    monotone_from: int | None = None
    matter: list[float] | None = None
    defects: list[float] | None = None
    certification: str = "fixed-window convergence"

    @field_validator("distances")
    def validate_distances(cls, v: list[float]) -> list[float]:
        if any(d < 0 for d in v):
            raise ValueError("distances must be nonnegative")
        return v

    def csv_rows(self) -> list[list]:
        return [
            [i, m, d]
            for i, m, d in zip(self.indices, self.masses, self.distances)
        ]

    def defect_rows(self) -> list[list]:
        if self.matter is None or self.defects is None:
            return []
        return [
            [i, m, mt, d]
            for i, m, mt, d in zip(
                self.indices, self.masses, self.matter, self.defects
            )
        ]


class RunConfig(BaseModel):
    """Configuration of one CLI run.

    Attributes:
        command: Command - Subcommand to execute.
        spec: MetricSpec | None - Metric for adm-mass, fg-profile and
            weighted-mass.
        surface: ConicalSurface | None - Surface for cone-angle.
        experiment: ExperimentParams | None - Sequence experiments.
        radii: list[float] | None - Evaluation radii (command default when
            absent).
        quadrature: int - Nodes per angle on coordinate spheres.
        outer_radius: float - Outer radius of volume integrals.
        out: str - Output directory.
        json_name: str | None - JSON report file name.
        csv_name: str | None - CSV file name.
        seed: int - Seed echoed in reports for randomized checks.
        threads: int - Worker threads for per-radius work.
    """

    command: Command
    spec: MetricSpec | None = None
    surface: ConicalSurface | None = None
    experiment: ExperimentParams | None = None
    radii: list[float] | None = None
    quadrature: int = Field(default=settings.DEFAULT_QUADRATURE, ge=2)
    outer_radius: float = Field(default=settings.DEFAULT_OUTER_RADIUS, gt=0)
    out: str = "."
    json_name: str | None = None
    csv_name: str | None = None
    seed: int = 0
    threads: int = Field(default=settings.THREADS, ge=1)

    @field_validator("radii")
    def validate_radii(cls, v: list[float] | None) -> list[float] | None:
        return None if v is None else _check_radii(v)

    @model_validator(mode="before")
    @classmethod
    def surface_from_spec(cls, data: Any) -> Any:
        if (
            isinstance(data, dict)
            and data.get("command") == "cone-angle"
            and data.get("surface") is None
            and isinstance(data.get("spec"), dict)
            and "alpha" in data["spec"]
        ):
            data = dict(data)
            data["surface"] = data.pop("spec")
        return data

    @model_validator(mode="after")
    def check_inputs(self) -> RunConfig:
        needs = {
            "adm-mass": "spec",
            "fg-profile": "spec",
            "weighted-mass": "spec",
            "cone-angle": "surface",
            "sequence": "experiment",
            "cone-sequence": "experiment",
        }[self.command]
        if getattr(self, needs) is None:
            raise ValueError(f"command {self.command} needs '{needs}'")
        return self
