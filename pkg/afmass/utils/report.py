"""JSON and CSV persistence of reports."""

import csv
import json
import os
from typing import Any, Iterable, List, Type, TypeVar

from pydantic import BaseModel, ValidationError

from afmass.errors import ConfigInvalid, IoError
from afmass.settings import JSON_INDENT
from afmass.utils.log import get_logger

log = get_logger()
Model = TypeVar("Model", bound=BaseModel)


def _jsonable(data: Any) -> Any:
    if isinstance(data, BaseModel):
        return data.model_dump(mode="json")
    if isinstance(data, (list, tuple)):
        return [_jsonable(item) for item in data]
    if isinstance(data, dict):
        return {key: _jsonable(value) for key, value in data.items()}
    return data


def write_report(path: str, data: Any) -> str:
    """Writes a model (or a dict of models) as indented JSON.

    Args:
        path (str): Target file, parent directories are created.
        data (Any): pydantic model, list or dict of models or plain data.

    Returns:
        str: The path written.

    Raises:
        IoError: If the file can not be written.
    """
    try:
        os.makedirs(os.path.dirname(os.path.abspath(path)), exist_ok=True)
        with open(path, "w") as output_file:
            output_file.write(json.dumps(_jsonable(data), indent=JSON_INDENT))
    except OSError as e:
        log.error(str(e))
        raise IoError(f"can not write report {path}: {e}") from e
    return path


def read_report(path: str, cls: Type[Model]) -> Model:
    """Reads a JSON report back into `cls`.

    Raises:
        IoError: If the file can not be read.
        ConfigInvalid: If the content is not valid JSON for `cls`.
    """
    try:
        with open(path) as input_file:
            content = input_file.read()
    except OSError as e:
        raise IoError(f"can not read report {path}: {e}") from e
    try:
        return cls.model_validate(json.loads(content))
    except (json.JSONDecodeError, ValidationError) as e:
        raise ConfigInvalid(f"{path}: {e}") from e


def write_csv(path: str, columns: Iterable[str], rows: Iterable[list]) -> str:
    """Writes a header line and rows with '.' decimals.

    Raises:
        IoError: If the file can not be written.
    """
    try:
        os.makedirs(os.path.dirname(os.path.abspath(path)), exist_ok=True)
        with open(path, "w", newline="") as output_file:
            writer = csv.writer(output_file)
            writer.writerow(list(columns))
            for row in rows:
                writer.writerow(
                    [repr(v) if isinstance(v, float) else v for v in row]
                )
    except OSError as e:
        log.error(str(e))
        raise IoError(f"can not write csv {path}: {e}") from e
    return path


def read_csv(path: str) -> List[dict]:
    """Rows of a CSV file as dicts of strings keyed by the header."""
    try:
        with open(path, newline="") as input_file:
            return list(csv.DictReader(input_file))
    except OSError as e:
        raise IoError(f"can not read csv {path}: {e}") from e
