"""CSV datasets with a mandatory header; floats are written with ``repr``."""

import csv
import math

import numpy as np

from .errors import CondensityError
from .transform import RawDataset


class DataError(CondensityError, ValueError):
    pass


def dataset_header(d):
    return [f"x_{j}" for j in range(d)] + ["y"]


def write_matrix(path, header, rows):
    with open(path, "w", newline="") as fh:
        fh.write(",".join(header) + "\n")
        for row in rows:
            fh.write(",".join(repr(float(v)) for v in row) + "\n")


def write_dataset(path, data):
    write_matrix(path, dataset_header(data.d), np.column_stack([data.x, data.y]))


def read_matrix(path):
    """Return (header, float matrix); errors name the 1-based file line and the column."""
    try:
        fh = open(path, newline="")
    except OSError as exc:
        raise DataError(f"cannot open {path}: {exc}") from exc
    with fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if not header:
            raise DataError(f"{path}: empty file, expected a header line")
        header = [h.strip() for h in header]
        rows = []
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != len(header):
                raise DataError(f"{path}: row {lineno} has {len(row)} fields, header has {len(header)}")
            values = []
            for col, cell in zip(header, row):
                try:
                    v = float(cell)
                except ValueError:
                    raise DataError(f"{path}: row {lineno}, column {col!r}: non-numeric value {cell!r}") from None
                if not math.isfinite(v):
                    raise DataError(f"{path}: row {lineno}, column {col!r}: non-finite value {cell!r}")
                values.append(v)
            rows.append(values)
    if not rows:
        raise DataError(f"{path}: no data rows")
    return header, np.array(rows, dtype=float)


def read_dataset(path):
    header, m = read_matrix(path)
    if header[-1] != "y" or len(header) < 2:
        raise DataError(f"{path}: expected header x_0,...,x_(d-1),y")
    try:
        return RawDataset(m[:, :-1], m[:, -1])
    except ValueError as exc:
        raise DataError(f"{path}: {exc}") from exc
