import math

import numpy as np
import pytest

from afmass.errors import GridMismatch, WindowExitsChart
from afmass.metric import metric_at
from afmass.models import ExperimentParams, MetricSpec
from afmass.sequences import (
    assemble_report,
    blow_up_window,
    c2_window_distance,
    escaping_window,
    normalizing_map,
    run_semicontinuity_experiment,
    window_grid,
)

SCHWARZSCHILD = MetricSpec.schwarzschild(3, 1.0)


@pytest.mark.unit
@pytest.mark.parametrize("n, resolution", [(2, 3), (3, 5)])
def test_window_grid(n, resolution):
    grid = window_grid(n, 2.0, resolution)
    assert grid.shape == (resolution**n, n)
    assert grid.min() == -2.0
    assert grid.max() == 2.0


@pytest.mark.unit
def test_normalizing_map():
    g0 = metric_at(
        MetricSpec.asymptotically_schwarzschild(3, 1.0, 0.5), [2.0, 1.0, 0]
    )
    A = normalizing_map(g0)
    assert A.T @ g0 @ A == pytest.approx(np.eye(3), abs=1e-14)


@pytest.mark.unit
def test_blow_up_window_is_identity_at_the_center():
    sample = blow_up_window(SCHWARZSCHILD, [10.0, 0.0, 0.0], 4, L=1.0)
    center = len(sample.points) // 2
    assert np.all(sample.points[center] == 0)
    assert sample.g[center] == pytest.approx(np.eye(3), abs=1e-14)
    assert sample.scale == 4.0


@pytest.mark.unit
def test_blow_up_windows_flatten():
    distances = [
        c2_window_distance(blow_up_window(SCHWARZSCHILD, [10, 0, 0], i))
        for i in (1, 2, 4, 8)
    ]
    assert all(b < a for a, b in zip(distances, distances[1:]))


@pytest.mark.unit
@pytest.mark.parametrize("center", [[0.2, 0.0, 0.0], [0.8, 0.0, 0.0]])
def test_window_leaving_the_chart(center):
    with pytest.raises(WindowExitsChart):
        blow_up_window(SCHWARZSCHILD, center, 1)


@pytest.mark.unit
def test_escaping_windows_flatten():
    offsets = [[20.0, 0, 0], [40.0, 0, 0], [80.0, 0, 0]]
    samples = escaping_window(SCHWARZSCHILD, offsets)
    distances = [c2_window_distance(s) for s in samples]
    assert all(b < a for a, b in zip(distances, distances[1:]))
    assert samples[0].label == "|p|=20"


@pytest.mark.unit
def test_distance_to_itself_is_zero():
    sample = blow_up_window(SCHWARZSCHILD, [10.0, 0.0, 0.0], 2)
    assert c2_window_distance(sample, sample) == 0.0


@pytest.mark.unit
def test_distance_on_different_grids():
    coarse = blow_up_window(SCHWARZSCHILD, [10, 0, 0], 2, resolution=3)
    fine = blow_up_window(SCHWARZSCHILD, [10, 0, 0], 2, resolution=5)
    with pytest.raises(GridMismatch):
        c2_window_distance(coarse, fine)


@pytest.mark.unit
def test_assemble_report_verdicts():
    report = assemble_report(
        "example",
        "blow_up",
        [1, 2, 3, 4],
        [3.0, 2.0, 1.0, 1.0],
        "limit",
        0.5,
        [1.0, 3.0, 2.0, 1.0],
        "distance",
    )
    assert report.liminf_mass == 1.0
    assert report.verdict
    assert report.drop == pytest.approx(0.5)
    assert report.monotone_from == 2
    assert not report.drop_unbounded

    report = assemble_report(
        "example",
        "blow_up",
        [1, 2, 3, 4],
        [1.0, 0.2, 0.1, 0.1],
        "limit",
        0.5,
        [1.0, 0.5, 0.25, 0.125],
        "distance",
    )
    assert not report.verdict
    assert report.fitted_exponent == pytest.approx(1.5, rel=0.2)
    assert report.monotone_from == 1


@pytest.mark.unit
@pytest.mark.high
def test_blow_up_experiment():
    report = run_semicontinuity_experiment("blow_up")
    assert report.masses == [1.0, 2.0, 4.0, 8.0]
    assert report.limit_mass == 0.0
    assert report.verdict
    assert report.drop_unbounded
    assert report.fitted_exponent == pytest.approx(1.0, rel=0.15)
    assert report.certification == "fixed-window convergence"


@pytest.mark.unit
@pytest.mark.high
def test_escaping_experiment():
    params = ExperimentParams(kind="escaping", indices=[1, 2, 4, 8])
    report = run_semicontinuity_experiment("escaping", params)
    assert report.masses == [1.0] * 4
    assert report.drop == 1.0
    assert report.verdict
    assert report.nominal_exponent == 1.0
    assert report.fitted_exponent == pytest.approx(1.0, rel=0.15)
    assert report.monotone_from == 1


@pytest.mark.unit
def test_constant_experiment():
    report = run_semicontinuity_experiment("constant")
    assert report.distances == [0.0] * 4
    assert report.drop == 0.0
    assert report.verdict
    assert report.limit_mass == 1.0


@pytest.mark.unit
def test_experiment_kind_overrides_params():
    params = ExperimentParams(kind="blow_up", indices=[1, 2, 3])
    report = run_semicontinuity_experiment("constant", params)
    assert report.kind == "constant"
    assert report.indices == [1, 2, 3]


@pytest.mark.unit
def test_numerical_masses():
    params = ExperimentParams(
        kind="blow_up", indices=[1, 2, 3], mass_mode="numerical", q=8
    )
    report = run_semicontinuity_experiment("blow_up", params)
    assert report.masses == pytest.approx([1.0, 2.0, 3.0], abs=3e-3)


@pytest.mark.unit
@pytest.mark.slow
def test_shell_experiment():
    params = ExperimentParams(kind="shells", indices=[1, 2, 4, 8])
    report = run_semicontinuity_experiment("shells", params)
    assert report.masses == pytest.approx([1 / (2 * math.pi)] * 4)
    assert report.limit_mass == 0.0
    assert report.drop == pytest.approx(1 / (2 * math.pi))
    assert all(d < 0 for d in report.defects)
    assert report.defects == sorted(report.defects)
    assert abs(report.defects[-1]) < 1e-2
    assert all(b < a for a, b in zip(report.distances, report.distances[1:]))
    assert report.nominal_exponent == pytest.approx(0.25)
