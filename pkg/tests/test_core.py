import json
import os

import pytest

from afmass import __version__
from afmass.core import load_config, run
from afmass.errors import ConfigInvalid
from afmass.utils.report import read_csv

from .constants import (
    ADM_CONFIG,
    CONE_CONFIG,
    CONE_SEQUENCE_CONFIG,
    EMPTY_RADII_CONFIG,
    FAILING_CONFIG,
    FG_CONFIG,
    MALFORMED_CONFIG,
    SEQUENCE_CONFIG,
    WEIGHTED_CONFIG,
)


@pytest.mark.unit
@pytest.mark.high
def test_load_config_applies_overrides():
    config = load_config(ADM_CONFIG, out="reports", quadrature=8, threads=None)
    assert config.command == "adm-mass"
    assert config.spec.params["m"] == 1.0
    assert config.radii == [50.0, 100.0, 200.0, 400.0]
    assert config.out == "reports"
    assert config.quadrature == 8
    assert config.threads == 1


@pytest.mark.unit
@pytest.mark.parametrize(
    "path", ["missing.json", MALFORMED_CONFIG, EMPTY_RADII_CONFIG]
)
def test_load_config_rejects(path):
    with pytest.raises(ConfigInvalid):
        load_config(path)


@pytest.mark.unit
def test_load_config_needs_an_object():
    with open("list.json", "w") as config_file:
        json.dump([1, 2, 3], config_file)
    with pytest.raises(ConfigInvalid):
        load_config("list.json")


@pytest.mark.unit
def test_load_config_rejects_a_command_override_without_inputs():
    with pytest.raises(ConfigInvalid):
        load_config(ADM_CONFIG, command="sequence")


@pytest.mark.unit
@pytest.mark.high
def test_run_adm_mass():
    outcome = run(load_config(ADM_CONFIG, out="out"))
    assert outcome.exit_code == 0
    assert outcome.json_path == os.path.join("out", "adm-mass.json")
    assert outcome.csv_paths == [os.path.join("out", "adm-mass.csv")]

    with open(outcome.json_path) as report_file:
        report = json.load(report_file)
    assert report["tool"] == "afmass"
    assert report["version"] == __version__
    assert report["command"] == "adm-mass"
    assert report["config"]["spec"]["family"] == "schwarzschild"
    assert report["result"]["value"] == pytest.approx(1.0, abs=1e-3)
    assert report == outcome.report

    rows = read_csv(outcome.csv_paths[0])
    assert [float(row["r"]) for row in rows] == [50.0, 100.0, 200.0, 400.0]
    assert list(rows[0]) == ["r", "flux"]


@pytest.mark.unit
def test_run_is_deterministic():
    first = run(load_config(ADM_CONFIG, out="a")).report
    second = run(load_config(ADM_CONFIG, out="b")).report
    for report in (first, second):
        report.pop("timestamp")
        report["config"].pop("out")
    assert first == second


@pytest.mark.unit
def test_run_with_custom_file_names():
    config = load_config(
        ADM_CONFIG, out="out", json_name="mass.json", csv_name="flux.csv"
    )
    outcome = run(config)
    assert outcome.json_path == os.path.join("out", "mass.json")
    assert outcome.csv_paths == [os.path.join("out", "flux.csv")]


@pytest.mark.unit
@pytest.mark.high
def test_failed_computation_writes_an_error_report():
    outcome = run(load_config(FAILING_CONFIG))
    assert outcome.exit_code == 1
    assert outcome.csv_paths == []
    with open(outcome.json_path) as report_file:
        report = json.load(report_file)
    assert report["error"]["type"] == "UnsupportedDimension"
    assert report["error"]["module"] == "afmass.errors"
    assert "result" not in report


@pytest.mark.unit
@pytest.mark.medium
def test_run_fg_profile():
    outcome = run(load_config(FG_CONFIG))
    assert outcome.exit_code == 0
    result = outcome.report["result"]
    radii = [item["r"] for item in result["profile"]]
    assert radii == [10.0, 20.0, 40.0, 80.0]
    assert result["limit"]["value"] == pytest.approx(1.0, abs=1e-3)
    rows = read_csv(outcome.csv_paths[0])
    assert list(rows[0])[:2] == ["r", "fg"]


@pytest.mark.unit
@pytest.mark.medium
@pytest.mark.slow
def test_run_weighted_mass():
    outcome = run(load_config(WEIGHTED_CONFIG))
    assert outcome.exit_code == 0
    result = outcome.report["result"]
    assert result["mass"]["value"] == pytest.approx(1.0, abs=1e-3)
    assert result["matter_integral"] == pytest.approx(0.0, abs=1e-8)
    assert result["divergence"]["value"] == pytest.approx(1.0, abs=2e-3)


@pytest.mark.unit
@pytest.mark.medium
def test_run_sequence():
    outcome = run(load_config(SEQUENCE_CONFIG))
    assert outcome.exit_code == 0
    result = outcome.report["result"]
    assert result["masses"] == [1.0, 2.0, 4.0, 8.0]
    assert result["verdict"]
    rows = read_csv(outcome.csv_paths[0])
    assert list(rows[0]) == ["index", "mass", "distance"]
    assert len(rows) == 4


@pytest.mark.unit
@pytest.mark.medium
def test_run_cone_angle():
    outcome = run(load_config(CONE_CONFIG))
    assert outcome.exit_code == 0
    assert outcome.report["result"]["value"] == pytest.approx(0.3, abs=1e-8)
    assert outcome.json_path == os.path.join(".", "cone-angle.json")


@pytest.mark.unit
@pytest.mark.medium
def test_run_cone_sequence():
    outcome = run(load_config(CONE_SEQUENCE_CONFIG))
    assert outcome.exit_code == 0
    assert outcome.report["result"]["drop"] == pytest.approx(0.3, abs=1e-8)
