"""Observed-data containers, covariate standardization and CSV ingestion.

The working representation is columnar: outcome ``y``, mediator ``m``,
post-treatment confounder ``v``, binary treatment ``z`` and a baseline
confounder matrix ``c`` whose columns are typed binary or continuous.
Missing entries (allowed in y, m, v and binary confounders) are tracked with
boolean masks; continuous confounder columns are standardized at ingestion
and the transform is kept so reports can quote raw covariate values.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field

import numpy as np

__all__ = ["DataError", "ObservedRecord", "MediationData", "load_csv"]


class DataError(ValueError):
    """Malformed or inconsistent observed data."""


@dataclass(frozen=True)
class ObservedRecord:
    """A single subject: values with None marking a missing field."""

    y: float | None
    m: float | None
    v: float | None
    z: int
    c: tuple

    def __post_init__(self):
        if self.z not in (0, 1):
            raise DataError("treatment z must be 0 or 1")
        observed = [self.y, self.m, self.v, self.z, *self.c]
        if all(x is None for x in observed):
            raise DataError("record has no observed fields")


def _col(values, missing_ok):
    arr = np.array([np.nan if x is None else float(x) for x in values], dtype=float)
    mask = np.isnan(arr)
    if mask.any() and not missing_ok:
        raise DataError("missing values not allowed in this field")
    return arr, mask


@dataclass
class MediationData:
    """Columnar observed data with missingness masks and scaling transforms.

    The outcome, mediator, post-treatment confounder and continuous
    confounder columns are standardized (observed entries: mean 0, sd 1) so
    the default priors live on the data's scale; binary columns are left
    untouched. The transforms are recorded and inverted when effects are
    reported, so all outputs are on the raw outcome scale.
    """

    y: np.ndarray
    m: np.ndarray
    v: np.ndarray
    z: np.ndarray
    c: np.ndarray
    c_binary: np.ndarray
    y_mis: np.ndarray
    m_mis: np.ndarray
    v_mis: np.ndarray
    c_mis: np.ndarray
    c_raw: np.ndarray = field(default=None, repr=False)
    c_center: np.ndarray = None
    c_scale: np.ndarray = None
    y_center: float = 0.0
    y_scale: float = 1.0
    m_center: float = 0.0
    m_scale: float = 1.0
    v_center: float = 0.0
    v_scale: float = 1.0

    @property
    def n(self) -> int:
        return self.y.size

    @property
    def p_c(self) -> int:
        return self.c.shape[1]

    @classmethod
    def from_arrays(cls, y, m, v, z, c, c_binary, standardize: bool = True) -> "MediationData":
        """Build from raw columns; NaN marks missing entries."""
        y = np.asarray(y, dtype=float).copy()
        m = np.asarray(m, dtype=float).copy()
        v = np.asarray(v, dtype=float).copy()
        z = np.asarray(z)
        c = np.atleast_2d(np.asarray(c, dtype=float)).copy()
        if c.shape[0] != y.size:
            c = c.T
        n = y.size
        if not (m.size == n and v.size == n and z.size == n and c.shape[0] == n):
            raise DataError("column lengths differ")
        zf = z.astype(float)
        if np.any(np.isnan(zf)) or not np.all(np.isin(zf, (0.0, 1.0))):
            raise DataError("treatment z must be fully observed and in {0, 1}")
        z = zf.astype(np.int8)
        c_binary = np.asarray(c_binary, dtype=bool)
        if c_binary.size != c.shape[1]:
            raise DataError("c_binary length does not match covariate count")

        y_mis, m_mis, v_mis = np.isnan(y), np.isnan(m), np.isnan(v)
        c_mis = np.isnan(c)
        for q in range(c.shape[1]):
            col = c[:, q]
            obs = col[~c_mis[:, q]]
            if c_binary[q]:
                if not np.all(np.isin(obs, (0.0, 1.0))):
                    raise DataError(f"binary covariate column {q} contains non 0/1 values")
            elif c_mis[:, q].any():
                raise DataError("missing values only allowed in binary covariates")
        row_all_missing = y_mis & m_mis & v_mis & c_mis.all(axis=1)
        if row_all_missing.any():
            raise DataError("a record must have at least one observed field")

        c_raw = c.copy()
        center = np.zeros(c.shape[1])
        scale = np.ones(c.shape[1])
        scalars = {}
        if standardize:
            for q in range(c.shape[1]):
                if c_binary[q]:
                    continue
                col = c[:, q]
                obs = col[~c_mis[:, q]]
                mu = float(np.mean(obs))
                sd = float(np.std(obs))
                if sd <= 0:
                    sd = 1.0
                center[q], scale[q] = mu, sd
                c[:, q] = (col - mu) / sd
            for name, arr, mis in (("y", y, y_mis), ("m", m, m_mis), ("v", v, v_mis)):
                obs = arr[~mis]
                mu = float(np.mean(obs)) if obs.size else 0.0
                sd = float(np.std(obs)) if obs.size else 1.0
                if sd <= 0:
                    sd = 1.0
                arr -= mu
                arr /= sd
                scalars[f"{name}_center"] = mu
                scalars[f"{name}_scale"] = sd
        return cls(
            y=y, m=m, v=v, z=z, c=c, c_binary=c_binary,
            y_mis=y_mis, m_mis=m_mis, v_mis=v_mis, c_mis=c_mis,
            c_raw=c_raw, c_center=center, c_scale=scale,
            **scalars,
        )

    @classmethod
    def from_records(cls, records, c_binary, standardize: bool = True) -> "MediationData":
        y, ym = _col([r.y for r in records], True)
        m, mm = _col([r.m for r in records], True)
        v, vm = _col([r.v for r in records], True)
        z = np.array([r.z for r in records])
        c = np.array(
            [[np.nan if x is None else float(x) for x in r.c] for r in records], dtype=float
        )
        return cls.from_arrays(y, m, v, z, c, c_binary, standardize=standardize)

    def standardize_value(self, col: int, value: float) -> float:
        """Map a raw covariate value onto the model's standardized scale."""
        return (value - self.c_center[col]) / self.c_scale[col]

    def has_missing(self) -> bool:
        return bool(self.y_mis.any() or self.m_mis.any() or self.v_mis.any() or self.c_mis.any())


def load_csv(path, binary_columns=None, standardize: bool = True) -> MediationData:
    """Read a ``y,m,v,z,c1..cp`` CSV; empty cells are missing values.

    ``binary_columns`` lists covariate column names that are binary; when
    None, a column is treated as binary if every observed value is 0 or 1.
    Raises DataError with the offending line number on malformed rows.
    """
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise DataError("empty CSV file") from None
        header = [h.strip().lower() for h in header]
        required = ["y", "m", "v", "z"]
        if header[: len(required)] != required:
            raise DataError("CSV header must start with y,m,v,z")
        c_names = header[len(required):]
        rows = []
        for lineno, row in enumerate(reader, start=2):
            if not row or all(cell.strip() == "" for cell in row):
                continue
            if len(row) != len(header):
                raise DataError(f"line {lineno}: expected {len(header)} fields, got {len(row)}")
            parsed = []
            for name, cell in zip(header, row):
                cell = cell.strip()
                if cell == "":
                    parsed.append(np.nan)
                    continue
                try:
                    parsed.append(float(cell))
                except ValueError:
                    raise DataError(f"line {lineno}: non-numeric value {cell!r} in column {name}") from None
            if np.isnan(parsed[3]) or parsed[3] not in (0.0, 1.0):
                raise DataError(f"line {lineno}: z must be 0 or 1")
            rows.append(parsed)
    if not rows:
        raise DataError("CSV contains no data rows")
    table = np.array(rows, dtype=float)
    y, m, v, z = table[:, 0], table[:, 1], table[:, 2], table[:, 3]
    c = table[:, 4:]
    if binary_columns is not None:
        binary_columns = {b.strip().lower() for b in binary_columns}
        unknown = binary_columns - set(c_names)
        if unknown:
            raise DataError(f"unknown binary column names: {sorted(unknown)}")
        c_binary = np.array([name in binary_columns for name in c_names])
    else:
        c_binary = np.array(
            [np.all(np.isin(c[~np.isnan(c[:, q]), q], (0.0, 1.0))) for q in range(c.shape[1])]
        )
    return MediationData.from_arrays(y, m, v, z.astype(int), c, c_binary, standardize=standardize)


def _stack_design(parts, c) -> np.ndarray:
    c = np.atleast_2d(np.asarray(c, dtype=float))
    n = max([c.shape[0]] + [np.atleast_1d(np.asarray(p, dtype=float)).shape[0] for p in parts])
    cols = [np.ones(n)]
    for p in parts:
        cols.append(np.broadcast_to(np.atleast_1d(np.asarray(p, dtype=float)), (n,)))
    if c.shape[0] != n:
        c = np.broadcast_to(c, (n, c.shape[1]))
    return np.column_stack([*cols, c])


def design_y(m, v, z, c, include_v: bool = True) -> np.ndarray:
    """Outcome design rows (1, M, V, Z, C) — V dropped when include_v is False."""
    return _stack_design([m, v, z] if include_v else [m, z], c)


def design_m(v, z, c, include_v: bool = True) -> np.ndarray:
    """Mediator design rows (1, V, Z, C) — V dropped when include_v is False."""
    return _stack_design([v, z] if include_v else [z], c)


def design_v(z, c) -> np.ndarray:
    """Confounder-regression design rows (1, Z, C)."""
    return _stack_design([z], c)
