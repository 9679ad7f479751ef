"""Deterministic JSON and CSV export of connection matrices."""

import csv
import json
from pathlib import Path
from typing import Union

from ..models.results import ConnectionMatrix

CSV_DIGITS = 17


def format_complex(value: complex, digits: int = CSV_DIGITS) -> str:
    """'re+imi' with `digits` significant digits, e.g. '1.5-0.25i'."""
    value = complex(value)
    return f"{value.real:.{digits}g}{value.imag:+.{digits}g}i"


def matrix_json(matrix: ConnectionMatrix) -> str:
    return json.dumps(matrix.to_dict(), indent=2, sort_keys=True)


def write_matrix_json(matrix: ConnectionMatrix, path: Union[str, Path]) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(matrix_json(matrix) + "\n", encoding="utf-8")
    return path


def write_matrix_csv(matrix: ConnectionMatrix, path: Union[str, Path]) -> Path:
    """One row per matrix row; the header row holds the basis labels."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", newline="", encoding="utf-8") as handle:
        writer = csv.writer(handle, lineterminator="\n")
        writer.writerow([index.label for index in matrix.legend])
        for row in matrix.entries:
            writer.writerow([format_complex(z) for z in row])
    return path
