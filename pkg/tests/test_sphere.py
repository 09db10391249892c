import math

import numpy as np
import pytest

from afmass.errors import PoleEvaluation, SingularPoint
from afmass.metric import (
    conformal_mean_curvature,
    conformal_sphere_scalar_curvature,
)
from afmass.models import MetricSpec
from afmass.sphere import (
    expansion_coefficients,
    induced_metric_at,
    intrinsic_scalar_curvature_at,
    laplacian_decomposition_residual,
    mean_curvature_at,
    random_sphere_points,
    second_fundamental_form,
    sphere_area,
    sphere_report,
)
from afmass.surfaces import ConicalSurface
from afmass.utils.quadrature import unit_sphere_area
from tests.constants import (
    SCHWARZSCHILD_G,
    SCHWARZSCHILD_H,
    SCHWARZSCHILD_RHO,
)

DIPOLE = MetricSpec.conformally_flat(3, a=0.5, dipole=[1.0, 0.0, 0.0])


def _dipole(n):
    dipole = [0.5] + [0.0] * (n - 1)
    return MetricSpec.conformally_flat(n, a=0.5, dipole=dipole)


@pytest.mark.unit
@pytest.mark.high
def test_euclidean_sphere_report_in_four_dimensions():
    report = sphere_report(MetricSpec.euclidean(4), 3.0, q=8)
    assert report.area == pytest.approx(54 * math.pi**2, rel=1e-12)
    assert report.H_min == pytest.approx(1.0, rel=1e-12)
    assert report.H_max == pytest.approx(1.0, rel=1e-12)
    assert report.rho_min == pytest.approx(2 / 3, rel=1e-12)
    assert report.rho_max == pytest.approx(2 / 3, rel=1e-12)
    assert report.q == 8


@pytest.mark.unit
@pytest.mark.parametrize("n", [2, 3, 5])
def test_euclidean_area_is_round(n):
    area = sphere_area(MetricSpec.euclidean(n), 2.0, q=6)
    assert area == pytest.approx(unit_sphere_area(n) * 2.0 ** (n - 1))


@pytest.mark.unit
def test_schwarzschild_area():
    area = sphere_area(MetricSpec.schwarzschild(3, 1.0), 10.0, q=8)
    assert area == pytest.approx(4 * math.pi * 100 * SCHWARZSCHILD_G)


@pytest.mark.unit
def test_cone_induced_metric():
    spec = ConicalSurface(alpha=0.7, cap="none").metric_spec()
    gamma = induced_metric_at(spec, 2.0, 0.3)
    assert gamma.shape == (1, 1)
    assert gamma[0, 0] == pytest.approx(1.96)


@pytest.mark.unit
def test_induced_metric_of_round_sphere():
    gamma = induced_metric_at(MetricSpec.euclidean(3), 2.0, [0.5, 1.0])
    expected = np.diag([4.0, 4.0 * math.sin(0.5) ** 2])
    assert gamma == pytest.approx(expected, abs=1e-14)


@pytest.mark.unit
def test_pole_is_rejected():
    with pytest.raises(PoleEvaluation):
        mean_curvature_at(MetricSpec.euclidean(3), 1.0, [0.0, 1.0])
    with pytest.raises(PoleEvaluation):
        induced_metric_at(MetricSpec.euclidean(3), 1.0, [math.pi, 0.0])


@pytest.mark.unit
def test_sphere_inside_excluded_ball():
    with pytest.raises(SingularPoint):
        sphere_area(MetricSpec.schwarzschild(3, 1.0), 0.3, q=4)


@pytest.mark.unit
@pytest.mark.parametrize("n", [3, 4, 6])
def test_euclidean_second_fundamental_form(n):
    phi = random_sphere_points(n, 1, seed=3)[0]
    second, mean, second_sq = second_fundamental_form(
        MetricSpec.euclidean(n), 2.0, phi
    )
    gamma = induced_metric_at(MetricSpec.euclidean(n), 2.0, phi)
    assert second == pytest.approx(gamma / 2.0)
    assert mean == pytest.approx((n - 1) / 2.0)
    assert second_sq == pytest.approx((n - 1) / 4.0)


@pytest.mark.unit
@pytest.mark.high
@pytest.mark.parametrize("n", [3, 4, 5])
@pytest.mark.parametrize("r", [5.0, 12.0, 50.0])
def test_mean_curvature_matches_conformal_formula(n, r):
    spec = _dipole(n)
    phi = random_sphere_points(n, 100, seed=11)
    numeric = mean_curvature_at(spec, r, phi)
    closed = conformal_mean_curvature(spec, r, phi)
    assert np.allclose(numeric, closed, rtol=1e-8, atol=0)


@pytest.mark.unit
@pytest.mark.high
@pytest.mark.parametrize("n", [3, 4, 5])
@pytest.mark.parametrize("r", [5.0, 12.0, 50.0])
def test_scalar_curvature_matches_conformal_formula(n, r):
    spec = _dipole(n)
    phi = random_sphere_points(n, 100, seed=12)
    numeric = intrinsic_scalar_curvature_at(spec, r, phi)
    closed = conformal_sphere_scalar_curvature(spec, r, phi)
    assert np.allclose(numeric, closed, rtol=1e-8, atol=0)


@pytest.mark.unit
def test_intrinsic_method_agrees_with_gauss_equation():
    phi = random_sphere_points(3, 5, seed=13)
    gauss = intrinsic_scalar_curvature_at(DIPOLE, 6.0, phi)
    intrinsic = intrinsic_scalar_curvature_at(
        DIPOLE, 6.0, phi, method="intrinsic"
    )
    assert np.allclose(intrinsic, gauss, rtol=1e-4)


@pytest.mark.unit
def test_single_point_returns_float():
    value = mean_curvature_at(MetricSpec.euclidean(3), 4.0, [1.0, 2.0])
    assert isinstance(value, float)
    assert value == pytest.approx(0.5)


@pytest.mark.unit
@pytest.mark.parametrize(
    "spec",
    [
        DIPOLE,
        MetricSpec.conformally_flat(
            4, a=0.3, dipole=[0.0, 0.2, 0.0, 0.1], bubble=0.5
        ),
    ],
)
def test_laplacian_decomposition(spec):
    phi = random_sphere_points(spec.n, 20, seed=5)
    residual = laplacian_decomposition_residual(spec, 3.0, phi)
    assert np.max(np.abs(residual)) < 1e-7


@pytest.mark.unit
def test_laplacian_decomposition_needs_conformal_metric():
    spec = MetricSpec.asymptotically_schwarzschild(3, 1.0, 0.5)
    with pytest.raises(ValueError):
        laplacian_decomposition_residual(spec, 3.0, [1.0, 1.0])


@pytest.mark.unit
@pytest.mark.parametrize("n", [3, 4, 5])
def test_mean_curvature_expansion(n):
    m = 1.0
    spec = MetricSpec.asymptotically_schwarzschild(n, m, 0.5)
    c, _ = expansion_coefficients(spec, [20.0, 40.0, 80.0, 160.0], q=8)
    assert c == pytest.approx(-((n - 1) ** 2) * m / (n - 2), rel=5e-2)


@pytest.mark.unit
@pytest.mark.parametrize("n", [3, 4, 5])
def test_scalar_curvature_expansion(n):
    m = 1.0
    spec = MetricSpec.asymptotically_schwarzschild(n, m, 0.5)
    c, _ = expansion_coefficients(
        spec, [20.0, 40.0, 80.0, 160.0], q=8, quantity="rho"
    )
    assert c == pytest.approx(-2 * (n - 1) * m, rel=5e-2)


@pytest.mark.unit
@pytest.mark.high
def test_schwarzschild_sphere_at_ten():
    report = sphere_report(MetricSpec.schwarzschild(3, 1.0), 10.0, q=8)
    assert report.H_min == pytest.approx(SCHWARZSCHILD_H, rel=1e-12)
    assert report.H_max == pytest.approx(SCHWARZSCHILD_H, rel=1e-12)
    assert report.rho_min == pytest.approx(SCHWARZSCHILD_RHO, rel=1e-10)
    assert report.maxH2 == pytest.approx(SCHWARZSCHILD_H**2, rel=1e-12)
