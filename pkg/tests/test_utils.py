import json
import logging
import math
import os

import numpy as np
import pytest

from afmass import __version__, settings
from afmass.errors import ConfigInvalid, FitIllConditioned, IoError
from afmass.models import DecayModel, MassEstimate
from afmass.utils.fit import (
    extrapolate,
    fit_decay,
    fit_power_law,
    fit_two_terms,
)
from afmass.utils.log import get_logger
from afmass.utils.parallel import ordered_map
from afmass.utils.quadrature import (
    effective_quadrature,
    embed,
    embed_tangents,
    gauss_legendre,
    polar_rule,
    radial_rule,
    spherical_chart,
    unit_sphere_area,
)
from afmass.utils.report import read_csv, read_report, write_csv, write_report


@pytest.mark.unit
@pytest.mark.parametrize(
    "n, expected",
    [(2, 2 * math.pi), (3, 4 * math.pi), (4, 2 * math.pi**2)],
)
def test_unit_sphere_area(n, expected):
    assert unit_sphere_area(n) == pytest.approx(expected, rel=1e-14)


@pytest.mark.unit
@pytest.mark.high
@pytest.mark.parametrize("n", [2, 3, 4, 5, 6, 7])
def test_weights_sum_to_the_sphere_area(n):
    chart = spherical_chart(n, 32)
    assert chart.weights.sum() == pytest.approx(unit_sphere_area(n), rel=1e-12)


@pytest.mark.unit
def test_chart_integrates_polynomials():
    # int_{S^2} x^2 = 4 pi / 3, int_{S^2} x^2 y^2 = 4 pi / 15
    chart = spherical_chart(3, 8)
    x, y, _ = chart.directions.T
    assert np.dot(chart.weights, x**2) == pytest.approx(4 * math.pi / 3)
    assert np.dot(chart.weights, x**2 * y**2) == pytest.approx(
        4 * math.pi / 15
    )


@pytest.mark.unit
@pytest.mark.parametrize("exponent", [1, 2, 3, 5])
@pytest.mark.parametrize("k", [0, 1, 3])
def test_polar_rule_is_exact_for_the_sine_weight(exponent, k):
    # int_0^pi cos^2k sin^e = B(k + 1/2, (e + 1)/2)
    phi, w = polar_rule(exponent, 4)
    exact = (
        math.gamma(k + 0.5)
        * math.gamma((exponent + 1) / 2)
        / math.gamma(k + 1 + exponent / 2)
    )
    assert np.dot(w, np.cos(phi) ** (2 * k)) == pytest.approx(
        exact, rel=1e-12
    )


@pytest.mark.unit
def test_polar_rule_with_sine_weight_is_gauss_legendre():
    phi, w = polar_rule(1, 6)
    t, legendre = np.polynomial.legendre.leggauss(6)
    assert np.cos(phi) == pytest.approx(t[::-1], abs=1e-13)
    assert w == pytest.approx(legendre[::-1], rel=1e-12)


@pytest.mark.unit
def test_version_comes_from_the_version_file():
    with open(settings.VERSION_FILE) as version_file:
        assert __version__ == version_file.read().strip()


@pytest.mark.unit
def test_directions_are_unit_vectors_off_the_poles():
    chart = spherical_chart(4, 6)
    norms = np.linalg.norm(chart.directions, axis=-1)
    assert norms == pytest.approx(np.ones(chart.size))
    polar = chart.angles[:, :-1]
    assert np.all(polar > 0) and np.all(polar < math.pi)


@pytest.mark.unit
def test_node_cap():
    assert effective_quadrature(3, 32) == 32
    assert effective_quadrature(7, 32) == 7
    assert spherical_chart(7, 32).q == 7


@pytest.mark.unit
def test_embed_tangents_match_finite_differences():
    angles = np.array([[0.7, 1.1, 2.3]])
    tangents = embed_tangents(angles)
    h = 1e-6
    for a in range(3):
        shift = np.zeros(3)
        shift[a] = h
        numeric = (embed(angles + shift) - embed(angles - shift)) / (2 * h)
        assert tangents[0, a] == pytest.approx(numeric[0], abs=1e-9)


@pytest.mark.unit
def test_gauss_legendre_interval():
    nodes, weights = gauss_legendre(1.0, 3.0, 5)
    assert weights.sum() == pytest.approx(2.0)
    assert np.dot(weights, nodes**9) == pytest.approx((3**10 - 1) / 10)


@pytest.mark.unit
def test_radial_rule():
    nodes, weights = radial_rule(1.0, 1000.0, breakpoints=(7.0,))
    assert np.all(np.diff(nodes) > 0)
    assert np.dot(weights, nodes**-2) == pytest.approx(1 - 1e-3, rel=1e-12)
    nodes, weights = radial_rule(0.0, 10.0)
    assert nodes[0] > 0
    assert np.dot(weights, nodes**2) == pytest.approx(1000 / 3)


@pytest.mark.unit
def test_radial_rule_rejects_empty_interval():
    with pytest.raises(ValueError):
        radial_rule(2.0, 1.0)


@pytest.mark.unit
def test_extrapolate_two_term_model():
    radii = [10.0, 20.0, 40.0, 80.0]
    values = [2.0 + 3.0 / r for r in radii]
    estimate = extrapolate(radii, values, 1.0)
    assert estimate.value == pytest.approx(2.0, rel=1e-12)
    assert estimate.model.c1 == pytest.approx(3.0, rel=1e-10)
    assert estimate.error == pytest.approx(3.0 / 80, rel=1e-6)


@pytest.mark.unit
def test_fit_decay_with_large_exponent():
    radii = np.array([50.0, 100.0, 200.0, 400.0])
    model, residual = fit_decay(radii, 1.0 + 5.0 * radii**-5, 5.0)
    assert model.c0 == pytest.approx(1.0, rel=1e-12)
    assert model.c1 == pytest.approx(5.0, rel=1e-6)
    assert residual < 1e-12


@pytest.mark.unit
@pytest.mark.parametrize(
    "radii, values",
    [
        ([1.0, 2.0], [1.0, 1.0]),
        ([2.0, 1.0, 3.0], [1.0, 1.0, 1.0]),
        ([1.0, 2.0, 3.0], [1.0, float("nan"), 1.0]),
    ],
)
def test_fit_rejects_bad_samples(radii, values):
    with pytest.raises(FitIllConditioned):
        fit_decay(radii, values, 1.0)


@pytest.mark.unit
def test_fit_two_terms():
    radii = np.array([20.0, 40.0, 80.0, 160.0])
    values = -4.0 * radii**-2 + 7.0 * radii**-3
    c, d = fit_two_terms(radii, values, 2, 3)
    assert (c, d) == pytest.approx((-4.0, 7.0), rel=1e-8)


@pytest.mark.unit
def test_fit_power_law():
    xs = [1.0, 2.0, 4.0, 8.0]
    k, amplitude = fit_power_law(xs, [3.0 * x**-1.5 for x in xs])
    assert k == pytest.approx(1.5)
    assert amplitude == pytest.approx(3.0)
    with pytest.raises(FitIllConditioned):
        fit_power_law(xs, [1.0, 0.0, 1.0, 1.0])


@pytest.mark.unit
@pytest.mark.parametrize("threads", [1, 3, 8])
def test_ordered_map_keeps_the_order(threads):
    assert ordered_map(lambda x: x * x, range(20), threads) == [
        x * x for x in range(20)
    ]


@pytest.mark.unit
def test_report_round_trip():
    estimate = MassEstimate(
        value=1.0,
        error=0.01,
        radii=[1.0, 2.0, 3.0],
        raw=[1.5, 1.25, 1.125],
        model=DecayModel(c0=1.0, c1=0.5, p=1.0),
    )
    path = write_report(os.path.join("reports", "mass.json"), estimate)
    with open(path) as report_file:
        content = report_file.read()
    assert json.loads(content)["value"] == 1.0
    assert f'\n{" " * settings.JSON_INDENT}"value"' in content
    assert read_report(path, MassEstimate) == estimate


@pytest.mark.unit
def test_read_report_errors():
    with pytest.raises(IoError):
        read_report("missing.json", MassEstimate)
    with open("broken.json", "w") as broken:
        broken.write("{not json")
    with pytest.raises(ConfigInvalid):
        read_report("broken.json", MassEstimate)
    with open("partial.json", "w") as partial:
        partial.write('{"value": 1.0}')
    with pytest.raises(ConfigInvalid):
        read_report("partial.json", MassEstimate)


@pytest.mark.unit
def test_write_report_to_unwritable_path():
    os.makedirs("taken")
    with pytest.raises(IoError):
        write_report("taken", {"a": 1})


@pytest.mark.unit
def test_csv_round_trip():
    path = write_csv("table.csv", ["r", "value"], [[10.0, 0.1], [20.0, 1 / 3]])
    rows = read_csv(path)
    assert rows[0] == {"r": "10.0", "value": "0.1"}
    assert float(rows[1]["value"]) == 1 / 3


@pytest.mark.unit
def test_logger_writes_once_per_file():
    logger = get_logger("check.log")
    handlers = len(logger.handlers)
    assert get_logger("check.log") is logger
    assert len(logger.handlers) == handlers
    assert logger.name == "afmass"
    assert any(isinstance(h, logging.Handler) for h in logger.handlers)
