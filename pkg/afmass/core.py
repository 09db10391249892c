"""Core module for afmass runs.

A run takes a validated `RunConfig`, dispatches to the library operation of
its command, and writes a JSON report and CSV tables to the output
directory. Every JSON report is wrapped in an envelope carrying the tool
version, the command, a timestamp and the full echoed configuration, so a
quoted number can be reproduced from the report alone.
"""

import json
import os
from datetime import datetime
from typing import Any, Callable, Dict, List, Optional, Tuple

from pydantic import BaseModel, ValidationError

from afmass import __version__
from afmass.cone import cone_mass, run_cone_experiment
from afmass.errors import ComputationError, ConfigInvalid
from afmass.mass import adm_mass, fg_limit, fg_profile
from afmass.models import ExperimentReport, FgResult, RunConfig
from afmass.sequences import run_semicontinuity_experiment
from afmass.settings import DATEFMT, DEFAULT_RADII
from afmass.utils.log import get_logger
from afmass.utils.report import write_csv, write_report
from afmass.weighted import mass_matter_defect, mass_via_divergence

log = get_logger()
Tables = List[Tuple[str, tuple, list]]


class RunResult(BaseModel):
    """Outcome of `run`.

    Attributes:
        exit_code: int - 0 on success, 1 on a failed computation, 2 on an
            invalid configuration.
        report: dict - The JSON envelope written to `json_path`.
        json_path: str | None - Written JSON report.
        csv_paths: list[str] - Written CSV tables.
    """

    exit_code: int
    report: Dict[str, Any]
    json_path: Optional[str] = None
    csv_paths: List[str] = []


def load_config(path: str, **overrides: Any) -> RunConfig:
    """Reads a JSON run configuration and applies CLI overrides.

    Args:
        path (str): JSON configuration file.
        **overrides (Any): Top-level fields replacing the file values;
            None values are ignored.

    Returns:
        RunConfig: The validated configuration.

    Raises:
        ConfigInvalid: If the file is missing, is not JSON or does not
            validate.
    """
    try:
        with open(path) as config_file:
            data = json.load(config_file)
    except FileNotFoundError as e:
        log.error(str(e))
        raise ConfigInvalid(f"config file not found: {path}") from e
    except json.JSONDecodeError as e:
        raise ConfigInvalid(f"{path} is not valid JSON: {e}") from e
    if not isinstance(data, dict):
        raise ConfigInvalid(f"{path} must hold a JSON object")
    data.update({k: v for k, v in overrides.items() if v is not None})
    try:
        return RunConfig.model_validate(data)
    except ValidationError as e:
        raise ConfigInvalid(str(e)) from e


def _radii(config: RunConfig) -> list:
    return config.radii or list(DEFAULT_RADII)


def _flux_rows(estimate) -> list:
    return [[r, value] for r, value in zip(estimate.radii, estimate.raw)]


def _adm_mass(config: RunConfig) -> Tuple[Any, Tables]:
    estimate = adm_mass(
        config.spec, _radii(config), config.quadrature, config.threads
    )
    return estimate, [("", ("r", "flux"), _flux_rows(estimate))]


def _fg_profile(config: RunConfig) -> Tuple[Any, Tables]:
    profile = fg_profile(
        config.spec, _radii(config), config.quadrature, config.threads
    )
    limit = None
    if len(profile) >= 3 and not any(item.flagged for item in profile):
        try:
            limit = fg_limit(
                config.spec, _radii(config), config.quadrature, config.threads
            )
        except ComputationError as e:
            log.warning("no F_g limit for %s: %s", config.spec.label, e)
    rows = [item.csv_row() for item in profile]
    return (
        {"profile": profile, "limit": limit},
        [("", FgResult.CSV_COLUMNS, rows)],
    )


def _weighted_mass(config: RunConfig) -> Tuple[Any, Tables]:
    report = mass_matter_defect(
        config.spec,
        _radii(config),
        config.quadrature,
        config.outer_radius,
        config.threads,
    )
    divergence = mass_via_divergence(
        config.spec, config.outer_radius, threads=config.threads
    )
    result = report.model_dump(mode="json")
    result["divergence"] = divergence.model_dump(mode="json")
    return result, [("", ("r", "flux"), _flux_rows(report.mass))]


def _experiment_tables(report: ExperimentReport) -> Tables:
    tables = [("", ExperimentReport.CSV_COLUMNS, report.csv_rows())]
    if report.defects is not None:
        tables.append(
            ("defects", ExperimentReport.DEFECT_COLUMNS, report.defect_rows())
        )
    return tables


def _sequence(config: RunConfig) -> Tuple[Any, Tables]:
    params = config.experiment
    report = run_semicontinuity_experiment(params.kind, params)
    return report, _experiment_tables(report)


def _cone_angle(config: RunConfig) -> Tuple[Any, Tables]:
    radii = config.radii
    estimate = cone_mass(config.surface, radii, config.quadrature)
    return estimate, [("", ("r", "value"), _flux_rows(estimate))]


def _cone_sequence(config: RunConfig) -> Tuple[Any, Tables]:
    report = run_cone_experiment(config.experiment)
    return report, _experiment_tables(report)


HANDLERS: Dict[str, Callable[[RunConfig], Tuple[Any, Tables]]] = {
    "adm-mass": _adm_mass,
    "fg-profile": _fg_profile,
    "weighted-mass": _weighted_mass,
    "sequence": _sequence,
    "cone-angle": _cone_angle,
    "cone-sequence": _cone_sequence,
}


def envelope(config: RunConfig, **content: Any) -> Dict[str, Any]:
    """JSON envelope of a report; `timestamp` is the only field that
    changes between identical runs."""
    return {
        "tool": "afmass",
        "version": __version__,
        "command": config.command,
        "timestamp": datetime.now().strftime(DATEFMT),
        "config": config.model_dump(mode="json"),
        **content,
    }


def _error(e: Exception) -> Dict[str, str]:
    return {
        "type": type(e).__name__,
        "message": str(e),
        "module": getattr(e, "__module__", ""),
        "origin": _origin(e),
    }


def _origin(e: Exception) -> str:
    """Module of the frame that raised `e`."""
    tb = e.__traceback__
    while tb is not None and tb.tb_next is not None:
        tb = tb.tb_next
    if tb is None:
        return ""
    return tb.tb_frame.f_globals.get("__name__", "")


def run(config: RunConfig) -> RunResult:
    """Executes one configured command and writes its reports.

    Reports go to `config.out` as `<json_name or command>.json` and
    `<csv_name or command>.csv`; shell experiments add a `defects` table.

    Args:
        config (RunConfig): Validated configuration.

    Returns:
        RunResult: Exit code, the JSON envelope and the written paths.

    Raises:
        IoError: If a report can not be written.
    """
    json_path = os.path.join(
        config.out, config.json_name or f"{config.command}.json"
    )
    stem = os.path.splitext(config.csv_name or f"{config.command}.csv")[0]
    log.info("running %s into %s", config.command, config.out)
    try:
        result, tables = HANDLERS[config.command](config)
    except ComputationError as e:
        log.error("%s failed: %s: %s", config.command, type(e).__name__, e)
        report = envelope(config, error=_error(e))
        return RunResult(
            exit_code=1,
            report=report,
            json_path=write_report(json_path, report),
        )
    except ConfigInvalid as e:
        log.error("%s rejected: %s", config.command, e)
        report = envelope(config, error=_error(e))
        return RunResult(
            exit_code=2,
            report=report,
            json_path=write_report(json_path, report),
        )

    report = envelope(config, result=result)
    csv_paths = []
    for suffix, columns, rows in tables:
        name = f"{stem}.csv" if not suffix else f"{suffix}.csv"
        csv_paths.append(
            write_csv(os.path.join(config.out, name), columns, rows)
        )
    return RunResult(
        exit_code=0,
        report=json.loads(json.dumps(report, default=_default)),
        json_path=write_report(json_path, report),
        csv_paths=csv_paths,
    )


def _default(value: Any) -> Any:
    if isinstance(value, BaseModel):
        return value.model_dump(mode="json")
    raise TypeError(f"{type(value).__name__} is not JSON serializable")

