"""CSV and JSON writers for command results."""

import csv
import io
import json
import math
import os
import sys
from pathlib import Path
from typing import Iterable, Optional, Sequence, Union

from pydantic import BaseModel

from .config import get_config
from .exceptions import ValidationError
from .logging_config import get_logger

logger = get_logger('export')

Payload = Union[BaseModel, Sequence[dict]]


def format_value(value, digits: int) -> str:
    """One CSV cell; floats use ``digits`` significant digits."""
    if isinstance(value, bool):
        return 'true' if value else 'false'
    if isinstance(value, float):
        return f"{value:.{digits}g}"
    if value is None:
        return ''
    return str(getattr(value, 'value', value))


def render_csv(rows: Iterable[dict], columns: Optional[Sequence[str]] = None,
               digits: Optional[int] = None) -> str:
    """Header row then one line per record, columns in fixed order."""
    rows = list(rows)
    digits = digits or get_config().output.float_digits
    if columns is None:
        columns = list(rows[0]) if rows else []
    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator='\n')
    writer.writerow(columns)
    for row in rows:
        writer.writerow([format_value(row.get(c), digits) for c in columns])
    return buffer.getvalue()


def _jsonable(value):
    if isinstance(value, float) and not math.isfinite(value):
        return 'nan' if math.isnan(value) else ('inf' if value > 0 else '-inf')
    if isinstance(value, dict):
        return {k: _jsonable(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_jsonable(v) for v in value]
    return getattr(value, 'value', value)


def render_json(payload: Payload) -> str:
    if isinstance(payload, BaseModel):
        data = payload.model_dump(mode='json')
    else:
        data = _jsonable(list(payload))
    return json.dumps(data, indent=2, allow_nan=False) + '\n'


def check_writable(out: Optional[Union[str, Path]]) -> None:
    """Fail early when ``out`` could not be written; None means stdout.

    Creates the missing parent directories, as emit would.

    Raises:
        ValidationError: if ``out`` is a directory or its parent is not writable
    """
    if out is None:
        return
    path = Path(out)
    if path.is_dir():
        raise ValidationError(f"--out {path} is a directory", field='--out', value=str(path))
    parent = path.parent
    try:
        parent.mkdir(parents=True, exist_ok=True)
    except OSError as e:
        raise ValidationError(f"cannot create {parent}: {e.strerror or e}", field='--out', value=str(path)) from e
    if not os.access(parent, os.W_OK) or (path.exists() and not os.access(path, os.W_OK)):
        raise ValidationError(f"{path} is not writable", field='--out', value=str(path))


def emit(payload: Payload, out: Optional[Union[str, Path]] = None, fmt: Optional[str] = None,
         columns: Optional[Sequence[str]] = None) -> str:
    """Write a report (pydantic model) or a row list to ``out``, or stdout when None.

    ``fmt`` defaults to the file suffix, then to JSON for models and CSV for rows.

    Raises:
        OSError: if the file cannot be written
        ValueError: if a model is asked for as CSV
    """
    if fmt is None:
        suffix = Path(out).suffix.lower().lstrip('.') if out else ''
        if suffix in ('csv', 'json'):
            fmt = suffix
        else:
            fmt = 'json' if isinstance(payload, BaseModel) else 'csv'

    if fmt == 'json':
        text = render_json(payload)
    elif fmt == 'csv':
        if isinstance(payload, BaseModel):
            raise ValueError(f"{type(payload).__name__} has no CSV form")
        text = render_csv(payload, columns)
    else:
        raise ValueError(f"unknown output format {fmt!r}")

    if out is None:
        sys.stdout.write(text)
    else:
        path = Path(out)
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(text, encoding='utf-8')
        logger.info(f"Wrote {path}")
    return text
