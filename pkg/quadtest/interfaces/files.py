"""
CSV and JSON input/output with atomic writes.

Floats are written with repr() so that re-parsing is lossless.
"""

import csv
import io
import json
import logging
import math
import os
import tempfile
from pathlib import Path
from typing import Any, Dict, Iterable, List, Sequence, Union

import numpy as np

from quadtest.errors import DataError
from quadtest.models.sample import Sample
from quadtest.models.simulation import ReplicationRecord
from quadtest.models.solution import ExtremalSolution

logger = logging.getLogger(__name__)

PathLike = Union[str, Path]


def format_value(value: Any) -> str:
    """Render a cell: floats at full round-trip precision, booleans in lower case."""
    if isinstance(value, (bool, np.bool_)):
        return "true" if value else "false"
    if isinstance(value, (float, np.floating)):
        return repr(float(value))
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    return str(value)


def json_default(value: Any) -> Any:
    if isinstance(value, np.ndarray):
        return value.tolist()
    if isinstance(value, np.generic):
        return value.item()
    if isinstance(value, Path):
        return str(value)
    raise TypeError(f"{type(value).__name__} is not JSON serialisable")


def _finite(value: Any) -> Any:
    # JSON has no infinities; they are written as strings.
    if isinstance(value, float) and not math.isfinite(value):
        return str(value)
    if isinstance(value, dict):
        return {key: _finite(item) for key, item in value.items()}
    if isinstance(value, (list, tuple)):
        return [_finite(item) for item in value]
    return value


def dumps_json(data: Dict[str, Any]) -> str:
    return json.dumps(_finite(data), indent=2, default=json_default) + "\n"


def write_atomic(path: PathLike, text: str) -> None:
    """
    Write text to path through a temporary file in the same directory and os.replace.

    Args:
        path (PathLike): Target file
        text (str): Full file contents
    """
    target = Path(path)
    target.parent.mkdir(parents=True, exist_ok=True)
    handle = tempfile.NamedTemporaryFile("w", encoding="utf-8", newline="", dir=target.parent,
                                         prefix=f".{target.name}.", suffix=".tmp", delete=False)
    try:
        with handle:
            handle.write(text)
            handle.flush()
            os.fsync(handle.fileno())
        os.replace(handle.name, target)
    except BaseException:
        if os.path.exists(handle.name):
            os.unlink(handle.name)
        raise
    logger.info("wrote %s", target)


def write_json(path: PathLike, data: Dict[str, Any]) -> None:
    write_atomic(path, dumps_json(data))


def csv_text(header: Sequence[str], rows: Iterable[Sequence[Any]]) -> str:
    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerow(header)
    for row in rows:
        writer.writerow([format_value(value) for value in row])
    return buffer.getvalue()


def weights_table(solution: ExtremalSolution) -> str:
    """
    CSV of (index_1..index_d, [tag], c, q, w_star, v_star), one row per element of N(T).

    Args:
        solution (ExtremalSolution): Tuned solution

    Returns:
        str: CSV text
    """
    active = solution.active
    header: List[str] = [f"index_{j + 1}" for j in range(active.dimension)]
    if active.tags is not None:
        header.append("tag")
    header += ["c", "q", "w_star", "v_star"]
    rows = []
    for k in range(len(active)):
        row: List[Any] = [int(v) for v in active.lattice[k]]
        if active.tags is not None:
            row.append(int(active.tags[k]))
        row += [active.c[k], active.q[k], solution.weights[k], solution.least_favorable[k]]
        rows.append(row)
    return csv_text(header, rows)


def records_table(records: Sequence[ReplicationRecord]) -> str:
    return csv_text(ReplicationRecord.COLUMNS, (record.to_row() for record in records))


def sample_header(point_dimension: int) -> List[str]:
    return [f"t{j + 1}" for j in range(point_dimension)] + ["x"]


def read_sample(path: PathLike, point_dimension: int) -> Sample:
    """
    Parse a data CSV with header t1..tD,x.

    Args:
        path (PathLike): CSV file
        point_dimension (int): Expected design dimension D

    Returns:
        Sample: The parsed observations
    """
    try:
        with open(path, "r", encoding="utf-8", newline="") as handle:
            lines = list(csv.reader(handle))
    except OSError as exc:
        raise DataError(f"cannot read {path}: {exc.strerror}")
    if not lines:
        raise DataError("the data file is empty", line=1)
    header = [name.strip() for name in lines[0]]
    seen = set()
    for name in header:
        if name in seen:
            raise DataError(f"duplicated column '{name}'", line=1, column=name)
        seen.add(name)
    expected = sample_header(point_dimension)
    for name in header:
        if name not in expected:
            raise DataError(f"unexpected column '{name}', expected {','.join(expected)}", line=1, column=name)
    for name in expected:
        if name not in seen:
            raise DataError(f"missing column '{name}' (the configuration implies D = {point_dimension})",
                            line=1, column=name)
    order = [header.index(name) for name in expected]
    values = []
    for number, row in enumerate(lines[1:], start=2):
        if not row or all(not cell.strip() for cell in row):
            continue
        if len(row) != len(header):
            raise DataError(f"expected {len(header)} fields, found {len(row)}", line=number)
        parsed = []
        for index in order:
            try:
                value = float(row[index])
            except ValueError:
                raise DataError(f"'{row[index]}' is not a decimal number", line=number, column=header[index])
            if not math.isfinite(value):
                raise DataError(f"non-finite value '{row[index]}'", line=number, column=header[index])
            parsed.append(value)
        if any(not 0.0 <= t <= 1.0 for t in parsed[:-1]):
            raise DataError("design point outside the unit cube [0,1]^d", line=number)
        values.append(parsed)
    if len(values) < 2:
        raise DataError(f"need at least two observations, found {len(values)}")
    table = np.asarray(values, dtype=float)
    return Sample(table[:, :-1], table[:, -1])


def write_sample(path: PathLike, sample: Sample) -> None:
    rows = (list(point) + [x] for point, x in zip(sample.points.tolist(), sample.x.tolist()))
    write_atomic(path, csv_text(sample_header(sample.dimension), rows))
