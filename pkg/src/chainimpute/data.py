"""Tabular data with an explicit missingness mask, splitting and standardization.

A :class:`DataMatrix` pairs an ``n x d`` float64 array with a boolean mask that
is ``True`` on observed cells.  The mask is authoritative: missing cells hold
NaN as a placeholder but no code path ever tests values to find them.
"""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np

from .errors import ConfigurationError, DataError, ShapeError, UnimputableColumnError

NA_TOKENS = ("", "NA")


def _frozen(a):
    a = np.array(a, copy=True)
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class DataMatrix:
    values: np.ndarray
    mask: np.ndarray
    column_names: tuple = field(default=())

    def __post_init__(self):
        values = np.asarray(self.values, dtype=np.float64)
        mask = np.asarray(self.mask)
        if values.ndim != 2:
            raise ShapeError(f"values must be 2-D, got shape {values.shape}")
        if mask.shape != values.shape:
            raise ShapeError(f"mask shape {mask.shape} != values shape {values.shape}")
        n, d = values.shape
        if n < 1 or d < 1:
            raise ShapeError(f"need n >= 1 and d >= 1, got {values.shape}")
        mask = mask.astype(bool)
        if not np.all(np.isfinite(values[mask])):
            raise DataError("observed cells must be finite")
        values = np.where(mask, values, np.nan)
        names = tuple(self.column_names) if len(self.column_names) else tuple(f"x{j}" for j in range(d))
        if len(names) != d:
            raise ShapeError(f"{len(names)} column names for {d} columns")
        object.__setattr__(self, "values", _frozen(values))
        object.__setattr__(self, "mask", _frozen(mask))
        object.__setattr__(self, "column_names", names)

    @classmethod
    def from_array(cls, values, mask=None, column_names=()):
        """Build from an array; without an explicit mask, NaN cells are taken as missing."""
        values = np.asarray(values, dtype=np.float64)
        if mask is None:
            mask = ~np.isnan(values)
        return cls(values, mask, tuple(column_names))

    @property
    def n(self) -> int:
        return self.values.shape[0]

    @property
    def d(self) -> int:
        return self.values.shape[1]

    @property
    def shape(self):
        return self.values.shape

    @property
    def response_indicator(self) -> np.ndarray:
        """0/1 matrix, 0 on missing cells."""
        return self.mask.astype(np.int8)

    @property
    def n_missing(self) -> int:
        return int(self.mask.size - np.count_nonzero(self.mask))

    def is_complete(self) -> bool:
        return bool(self.mask.all())

    def filled(self, fill) -> np.ndarray:
        """Writable copy of values with missing cells set to ``fill`` (scalar or per-column)."""
        out = np.array(self.values, copy=True)
        fill = np.asarray(fill, dtype=np.float64)
        if fill.ndim == 0:
            out[~self.mask] = fill
        else:
            r, c = np.nonzero(~self.mask)
            out[r, c] = fill[c]
        return out

    def take_rows(self, rows) -> "DataMatrix":
        return DataMatrix(self.values[rows], self.mask[rows], self.column_names)

    def with_values(self, values, mask=None) -> "DataMatrix":
        return DataMatrix(values, self.mask if mask is None else mask, self.column_names)

    def observed_column(self, j) -> np.ndarray:
        return self.values[self.mask[:, j], j]


def validate(data: DataMatrix) -> None:
    """Debug check of the mask/value consistency invariant."""
    if not np.array_equal(np.isnan(data.values), ~data.mask):
        raise DataError("mask and placeholder cells disagree")
    if not np.all(np.isfinite(data.values[data.mask])):
        raise DataError("non-finite observed cell")


@dataclass(frozen=True)
class SplitSpec:
    train_fraction: float = 0.70
    seed: int = 0

    def __post_init__(self):
        if not 0.0 < self.train_fraction < 1.0:
            raise ConfigurationError(f"train_fraction must lie in (0, 1), got {self.train_fraction}")


def split_indices(n: int, spec: SplitSpec):
    """Row indices (train, test), each in ascending order."""
    if n < 2:
        raise ShapeError("need at least two rows to split")
    n_train = math.floor(n * spec.train_fraction)
    n_train = min(max(n_train, 1), n - 1)
    perm = np.random.default_rng(spec.seed).permutation(n)
    return np.sort(perm[:n_train]), np.sort(perm[n_train:])


def split_train_test(data: DataMatrix, spec: SplitSpec):
    train, test = split_indices(data.n, spec)
    return data.take_rows(train), data.take_rows(test)


@dataclass(frozen=True, eq=False)
class StandardizationParams:
    means: np.ndarray
    stds: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "means", _frozen(np.asarray(self.means, dtype=np.float64)))
        object.__setattr__(self, "stds", _frozen(np.asarray(self.stds, dtype=np.float64)))
        if self.means.shape != self.stds.shape or self.means.ndim != 1:
            raise ShapeError("means and stds must be 1-D of equal length")

    @property
    def d(self) -> int:
        return self.means.shape[0]

    def to_dict(self):
        return {"means": self.means.tolist(), "stds": self.stds.tolist()}

    @classmethod
    def from_dict(cls, d):
        return cls(np.array(d["means"]), np.array(d["stds"]))


def standardize_fit(train: DataMatrix) -> StandardizationParams:
    means = np.empty(train.d)
    stds = np.empty(train.d)
    for j in range(train.d):
        col = train.observed_column(j)
        if col.size == 0:
            raise UnimputableColumnError(train.column_names[j])
        means[j] = col.mean()
        # population convention; zero-variance columns become a pure shift
        s = col.std()
        stds[j] = s if s > 0 else 1.0
    return StandardizationParams(means, stds)


def _check_width(data: DataMatrix, p: StandardizationParams):
    if data.d != p.d:
        raise ShapeError(f"data has {data.d} columns, parameters have {p.d}")


def standardize_apply(data: DataMatrix, p: StandardizationParams) -> DataMatrix:
    _check_width(data, p)
    return data.with_values((data.values - p.means) / p.stds)


def destandardize(data: DataMatrix, p: StandardizationParams) -> DataMatrix:
    _check_width(data, p)
    return data.with_values(data.values * p.stds + p.means)


# -- CSV ---------------------------------------------------------------------

def read_csv(
    path,
    target: str | int | None = None,
    *,
    delimiter: str = ",",
    header: bool = True,
    na_tokens: Sequence[str] = NA_TOKENS,
    drop_columns: Sequence[str] = (),
):
    """Read a numeric CSV.

    Returns ``(data, labels)``; ``labels`` is an array of the raw target strings,
    or ``None`` when no target column is given.  Empty fields and ``NA`` parse as
    missing.  The target may be a column name or an integer position.
    """
    with open(path, newline="", encoding="utf-8") as fh:
        rows = [r for r in csv.reader(fh, delimiter=delimiter) if r]
    if not rows:
        raise DataError(f"{path}: empty file")
    if header:
        names, rows = [h.strip() for h in rows[0]], rows[1:]
    else:
        names = [f"x{j}" for j in range(len(rows[0]))]
    width = len(names)
    for i, r in enumerate(rows):
        if len(r) != width:
            raise DataError(f"{path}: row {i + 1} has {len(r)} fields, expected {width}")

    if isinstance(target, int):
        t_idx = target % width
    elif target is not None:
        if target not in names:
            raise DataError(f"{path}: target column {target!r} not found")
        t_idx = names.index(target)
    else:
        t_idx = None
    unknown = set(drop_columns) - set(names)
    if unknown:
        raise DataError(f"{path}: cannot drop unknown columns {sorted(unknown)}")
    keep = [j for j in range(width) if j != t_idx and names[j] not in drop_columns]

    na = set(na_tokens)
    values = np.empty((len(rows), len(keep)))
    mask = np.ones((len(rows), len(keep)), dtype=bool)
    for i, r in enumerate(rows):
        for c, j in enumerate(keep):
            tok = r[j].strip()
            if tok in na:
                mask[i, c] = False
                values[i, c] = np.nan
                continue
            try:
                values[i, c] = float(tok)
            except ValueError:
                raise DataError(f"{path}: non-numeric value {tok!r} in column {names[j]!r}") from None
    labels = np.array([r[t_idx].strip() for r in rows]) if t_idx is not None else None
    return DataMatrix(values, mask, tuple(names[j] for j in keep)), labels


def _fmt(x: float) -> str:
    return repr(float(x))


def write_csv(path, data: DataMatrix, labels=None, target_name: str = "target") -> None:
    """Write values with a header; missing cells become empty fields."""
    path = Path(path)
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        head = list(data.column_names) + ([target_name] if labels is not None else [])
        w.writerow(head)
        for i in range(data.n):
            row = [_fmt(v) if m else "" for v, m in zip(data.values[i], data.mask[i])]
            if labels is not None:
                row.append(str(labels[i]))
            w.writerow(row)


def write_mask_csv(path, data: DataMatrix) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(data.column_names)
        w.writerows(data.response_indicator.tolist())


def read_mask_csv(path) -> np.ndarray:
    """Read a 0/1 mask CSV (with header) into a boolean observed-array."""
    with open(path, newline="", encoding="utf-8") as fh:
        rows = [r for r in csv.reader(fh) if r][1:]
    arr = np.array([[int(t) for t in r] for r in rows], dtype=np.int64)
    if not np.isin(arr, (0, 1)).all():
        raise DataError(f"{path}: mask entries must be 0 or 1")
    return arr.astype(bool)
