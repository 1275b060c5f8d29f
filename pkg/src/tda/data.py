"""Case-control biomarker data and its CSV representation."""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass

import numpy as np

from .errors import DataFormatError

MISSING = "NA"


@dataclass(frozen=True, eq=False)
class CaseControlData:
    """``values`` holds NaN wherever ``observed`` is False."""

    values: np.ndarray
    disease: np.ndarray
    observed: np.ndarray
    marker_names: tuple

    def __post_init__(self):
        v = np.array(self.values, dtype=float, ndmin=2)
        d = np.asarray(self.disease).astype(int).ravel()
        obs = np.asarray(self.observed, dtype=bool)
        if v.shape[0] != d.size or obs.shape != v.shape:
            raise ValueError("values, disease and observed have inconsistent shapes")
        if not np.isin(d, (0, 1)).all():
            raise ValueError("disease labels must be 0 or 1")
        if np.any(~np.isfinite(v[obs])):
            raise ValueError("observed values must be finite")
        if d.sum() == 0 or d.sum() == d.size:
            raise ValueError("both classes need at least one subject")
        if not obs.any(axis=1).all():
            raise ValueError("every row needs at least one observed marker")
        v = np.where(obs, v, np.nan)
        names = tuple(self.marker_names) if self.marker_names is not None else ()
        if not names:
            names = tuple(f"y{j + 1}" for j in range(v.shape[1]))
        if len(names) != v.shape[1]:
            raise ValueError("one marker name per column required")
        for a in (v, d, obs):
            a.setflags(write=False)
        object.__setattr__(self, "values", v)
        object.__setattr__(self, "disease", d)
        object.__setattr__(self, "observed", obs)
        object.__setattr__(self, "marker_names", names)

    @classmethod
    def from_arrays(cls, values, disease, marker_names=None) -> "CaseControlData":
        """Build from a matrix where NaN marks a missing value."""
        v = np.array(values, dtype=float, ndmin=2)
        return cls(v, disease, ~np.isnan(v), marker_names)

    @property
    def n(self) -> int:
        return self.values.shape[0]

    @property
    def n_markers(self) -> int:
        return self.values.shape[1]

    def class_counts(self) -> tuple[int, int]:
        n1 = int(self.disease.sum())
        return self.n - n1, n1

    @property
    def complete(self) -> bool:
        return bool(self.observed.all())

    def rows(self, idx) -> "CaseControlData":
        idx = np.asarray(idx)
        return CaseControlData(self.values[idx], self.disease[idx], self.observed[idx], self.marker_names)

    def columns(self, markers) -> "CaseControlData":
        """Restrict to a subset of markers; rows left with nothing observed are dropped."""
        markers = list(markers)
        obs = self.observed[:, markers]
        keep = obs.any(axis=1)
        return CaseControlData(self.values[keep][:, markers], self.disease[keep], obs[keep],
                               [self.marker_names[j] for j in markers])

    def class_values(self, d: int) -> np.ndarray:
        return self.values[self.disease == d]


def _parse_cell(text: str, line: int, column: str) -> float:
    s = text.strip()
    if s == MISSING:
        return math.nan
    try:
        x = float(s)
    except ValueError:
        raise DataFormatError(f"line {line}: non-numeric value {text!r} in column {column!r}") from None
    if not math.isfinite(x):
        raise DataFormatError(f"line {line}: non-finite value {text!r} in column {column!r}")
    return x


def read_csv(path, disease_col: str = "disease") -> CaseControlData:
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = [h.strip() for h in next(reader)]
        except StopIteration:
            raise DataFormatError("empty file") from None
        if disease_col not in header:
            raise DataFormatError(f"disease column {disease_col!r} not found in header")
        di = header.index(disease_col)
        names = [h for i, h in enumerate(header) if i != di]
        if not names:
            raise DataFormatError("no marker columns")
        values, labels = [], []
        for line, row in enumerate(reader, start=2):
            if not row or all(not c.strip() for c in row):
                continue
            if len(row) != len(header):
                raise DataFormatError(f"line {line}: expected {len(header)} fields, got {len(row)}")
            lab = row[di].strip()
            if lab not in ("0", "1"):
                raise DataFormatError(f"line {line}: disease value {lab!r} is not 0 or 1")
            labels.append(int(lab))
            values.append([_parse_cell(c, line, header[i]) for i, c in enumerate(row) if i != di])
    if not values:
        raise DataFormatError("no data rows")
    try:
        return CaseControlData.from_arrays(np.array(values), np.array(labels), names)
    except ValueError as exc:
        raise DataFormatError(str(exc)) from None


def write_csv(data: CaseControlData, path, disease_col: str = "disease") -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow([*data.marker_names, disease_col])
        for row, obs, d in zip(data.values, data.observed, data.disease):
            w.writerow([repr(float(x)) if o else MISSING for x, o in zip(row, obs)] + [int(d)])


def read_marker_table(path, marker_names, disease_col: str = "disease"):
    """Marker matrix with columns in ``marker_names`` order, plus labels when present.

    Returns ``(values, disease)``; ``disease`` is None without a label column.
    Missing cells become NaN.
    """
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = [h.strip() for h in next(reader)]
        except StopIteration:
            raise DataFormatError("empty file") from None
        absent = [m for m in marker_names if m not in header]
        if absent:
            raise DataFormatError(f"columns {absent} not found in header")
        cols = [header.index(m) for m in marker_names]
        di = header.index(disease_col) if disease_col in header else None
        values, labels = [], []
        for line, row in enumerate(reader, start=2):
            if not row or all(not c.strip() for c in row):
                continue
            if len(row) != len(header):
                raise DataFormatError(f"line {line}: expected {len(header)} fields, got {len(row)}")
            values.append([_parse_cell(row[i], line, header[i]) for i in cols])
            if di is not None:
                lab = row[di].strip()
                if lab not in ("0", "1"):
                    raise DataFormatError(f"line {line}: disease value {lab!r} is not 0 or 1")
                labels.append(int(lab))
    if not values:
        raise DataFormatError("no data rows")
    return np.array(values, dtype=float), (np.array(labels) if di is not None else None)
