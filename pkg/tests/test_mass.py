import pytest

from afmass.errors import (
    FitIllConditioned,
    NotAsymptoticallySchwarzschild,
    UnsupportedDimension,
)
from afmass.mass import (
    adm_flux,
    adm_mass,
    fg,
    fg_limit,
    fg_profile,
    penrose_like_check,
)
from afmass.models import MetricSpec
from afmass.surfaces import ConicalSurface

DIPOLE = MetricSpec.conformally_flat(3, a=0.5, dipole=[1.0, 0.0, 0.0])


@pytest.mark.unit
@pytest.mark.high
@pytest.mark.parametrize(
    "n",
    [
        3,
        4,
        5,
        pytest.param(6, marks=pytest.mark.slow),
        pytest.param(7, marks=pytest.mark.slow),
    ],
)
def test_schwarzschild_adm_mass(n):
    estimate = adm_mass(MetricSpec.schwarzschild(n, 1.0))
    assert estimate.value == pytest.approx(1.0, abs=1e-3)
    assert estimate.radii == [50.0, 100.0, 200.0, 400.0]
    assert len(estimate.raw) == 4


@pytest.mark.unit
@pytest.mark.high
def test_conformal_flux_closed_form():
    # flux(r) = 2a U^{(6-n)/(n-2)} = m (1 + m / 2r)^3 in n = 3
    flux = adm_flux(MetricSpec.schwarzschild(3, 2.0), 10.0, q=8)
    assert flux == pytest.approx(2.0 * 1.1**3, rel=1e-12)


@pytest.mark.unit
def test_euclidean_adm_mass_vanishes():
    estimate = adm_mass(MetricSpec.euclidean(3), q=8)
    assert estimate.value == pytest.approx(0.0, abs=1e-12)


@pytest.mark.unit
def test_adm_mass_of_scaled_metric():
    spec = MetricSpec.scaled(MetricSpec.schwarzschild(4, 1.0), 3.0)
    assert adm_mass(spec, q=8).value == pytest.approx(9.0, rel=1e-3)


@pytest.mark.unit
def test_adm_mass_is_translation_invariant():
    base = MetricSpec.schwarzschild(3, 1.0)
    moved = MetricSpec.translated(base, [1.0, 0.0, 0.0])
    estimate = adm_mass(moved, q=24)
    assert estimate.value == pytest.approx(1.0, abs=1e-3)


@pytest.mark.unit
def test_adm_mass_in_fd_mode():
    spec = MetricSpec.schwarzschild(3, 1.0, derivative_mode="fd")
    assert adm_mass(spec, q=8).value == pytest.approx(1.0, abs=1e-3)


@pytest.mark.unit
def test_adm_mass_threads_do_not_change_result():
    spec = MetricSpec.schwarzschild(3, 1.0)
    serial = adm_mass(spec, q=8, threads=1)
    threaded = adm_mass(spec, q=8, threads=4)
    assert serial.raw == threaded.raw
    assert serial.value == threaded.value


@pytest.mark.unit
def test_adm_flux_needs_three_dimensions():
    spec = ConicalSurface(alpha=0.7, cap="none").metric_spec()
    with pytest.raises(UnsupportedDimension):
        adm_flux(spec, 10.0)


@pytest.mark.unit
def test_clustered_radii_are_rejected():
    with pytest.raises(FitIllConditioned):
        adm_mass(
            MetricSpec.schwarzschild(3, 1.0),
            radii=[100.0, 100.00001, 100.00002],
            q=4,
        )


@pytest.mark.unit
@pytest.mark.high
@pytest.mark.parametrize("n", [3, 4])
@pytest.mark.parametrize("r", [5.0, 40.0])
def test_fg_of_schwarzschild_is_the_mass(n, r):
    result = fg(MetricSpec.schwarzschild(n, 1.0), r, q=8)
    assert result.fg == pytest.approx(1.0, abs=1e-9)
    assert result.hypothesis_holds
    assert not result.flagged


@pytest.mark.unit
def test_fg_of_euclidean_sphere_vanishes():
    result = fg(MetricSpec.euclidean(3), 7.0, q=8)
    assert result.fg == pytest.approx(0.0, abs=1e-12)


@pytest.mark.unit
def test_fg_scales_like_the_mass():
    lam = 2.0
    plain = fg(DIPOLE, 10.0, q=8)
    scaled = fg(MetricSpec.scaled(DIPOLE, lam), 10.0, q=8)
    assert scaled.fg == pytest.approx(lam * plain.fg, rel=1e-10)


@pytest.mark.unit
def test_fg_residual_halves_with_the_radius():
    residuals = [
        abs(fg(DIPOLE, r, q=16).fg - 1.0) for r in (40.0, 80.0, 160.0)
    ]
    assert residuals[0] / residuals[1] == pytest.approx(2.0, rel=0.15)
    assert residuals[1] / residuals[2] == pytest.approx(2.0, rel=0.15)


@pytest.mark.unit
def test_fg_profile_keeps_radius_order():
    profile = fg_profile(DIPOLE, [10.0, 20.0, 40.0], q=8, threads=3)
    assert [item.r for item in profile] == [10.0, 20.0, 40.0]


@pytest.mark.unit
@pytest.mark.parametrize(
    "n",
    [
        3,
        4,
        5,
        pytest.param(6, marks=pytest.mark.slow),
        pytest.param(7, marks=pytest.mark.slow),
    ],
)
def test_fg_limit(n):
    spec = MetricSpec.schwarzschild(n, 2.0)
    estimate = fg_limit(spec, [20.0, 40.0, 80.0, 160.0], q=8)
    assert estimate.value == pytest.approx(2.0, abs=1e-8)


@pytest.mark.unit
def test_fg_limit_needs_asymptotically_schwarzschild_metric():
    spec = ConicalSurface(alpha=0.7, cap="none").metric_spec()
    with pytest.raises(NotAsymptoticallySchwarzschild):
        fg_limit(spec)


@pytest.mark.unit
def test_penrose_like_check_on_schwarzschild():
    spec = MetricSpec.schwarzschild(3, 1.0)
    check = penrose_like_check(spec, 10.0, q=8, mass=adm_mass(spec, q=8))
    assert check.hypothesis_holds
    assert check.hypothesis_margin > 0
    assert check.inequality_holds
    assert check.fg_value == pytest.approx(1.0, abs=1e-9)


@pytest.mark.unit
def test_penrose_like_check_dimension_range():
    with pytest.raises(UnsupportedDimension):
        penrose_like_check(MetricSpec.schwarzschild(8, 1.0), 10.0, q=4)
