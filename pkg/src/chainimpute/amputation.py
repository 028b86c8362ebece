"""Simulated missingness (MCAR / MAR / MNAR) and missing-pattern diagnostics."""
from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum

import numpy as np

from .data import DataMatrix
from .errors import ConfigurationError, DataError

MAX_RATE = 0.95


class MissingKind(str, Enum):
    MCAR = "mcar"
    MAR = "mar"
    MNAR = "mnar"

    @classmethod
    def parse(cls, value) -> "MissingKind":
        if isinstance(value, cls):
            return value
        try:
            return cls(str(value).lower())
        except ValueError:
            raise ConfigurationError(f"unknown missingness kind {value!r}") from None


_KIND_CODE = {MissingKind.MCAR: 0, MissingKind.MAR: 1, MissingKind.MNAR: 2}


@dataclass(frozen=True)
class MissingnessSpec:
    kind: MissingKind
    rate: float
    seed: int = 0

    def __post_init__(self):
        object.__setattr__(self, "kind", MissingKind.parse(self.kind))
        if not 0.0 < self.rate <= MAX_RATE:
            raise ConfigurationError(f"missing rate must lie in (0, {MAX_RATE}], got {self.rate}")
        if self.seed < 0:
            raise ConfigurationError("seed must be non-negative")


def removal_budget(n: int, d: int, rate: float) -> int:
    """Total cells to mask: n*d*rate rounded half-up."""
    return int(math.floor(n * d * rate + 0.5))


def column_budgets(total: int, d: int) -> np.ndarray:
    """Even split of the budget across columns, remainder to the first columns."""
    b = np.full(d, total // d, dtype=np.int64)
    b[: total % d] += 1
    return b


def tail_bounds(col: np.ndarray, rate: float):
    """(low, high) cut points; cells strictly outside them are in the tails."""
    return float(np.quantile(col, rate / 2)), float(np.quantile(col, 1 - rate / 2))


def _rng(spec: MissingnessSpec, stream: int):
    return np.random.default_rng(np.random.SeedSequence([spec.seed, _KIND_CODE[spec.kind], stream]))


def mar_donors(d: int, spec: MissingnessSpec) -> np.ndarray:
    """Donor column for every target column under MAR (one donor each, never itself)."""
    if d < 2:
        raise ConfigurationError("MAR amputation needs at least two columns")
    donors = np.empty(d, dtype=np.int64)
    for i in range(d):
        r = int(_rng(spec, i).integers(d - 1))
        donors[i] = r if r < i else r + 1
    return donors


def _pick_rows(driver: np.ndarray, rate: float, budget: int, rng) -> np.ndarray:
    """Rows to mask given the column whose tails drive the selection."""
    low, high = tail_bounds(driver, rate)
    eligible = np.flatnonzero((driver < low) | (driver > high))
    if eligible.size >= budget:
        return np.sort(rng.choice(eligible, size=budget, replace=False))
    rest = np.flatnonzero((driver >= low) & (driver <= high))
    gap = np.minimum(driver[rest] - low, high - driver[rest])
    order = np.argsort(gap, kind="stable")
    extra = rest[order[: budget - eligible.size]]
    return np.sort(np.concatenate([eligible, extra]))


def amputate(complete: DataMatrix, spec: MissingnessSpec) -> DataMatrix:
    """Mask exactly ``round(n*d*rate)`` cells of a complete matrix."""
    if not complete.is_complete():
        raise DataError("amputation needs a complete matrix")
    n, d = complete.shape
    if spec.kind is MissingKind.MAR and d < 2:
        raise ConfigurationError("MAR amputation needs at least two columns")
    total = removal_budget(n, d, spec.rate)
    mask = np.ones((n, d), dtype=bool)
    if total == 0:
        return complete

    X = complete.values
    if spec.kind is MissingKind.MCAR:
        flat = _rng(spec, d).choice(n * d, size=total, replace=False)
        mask.flat[flat] = False
    else:
        budgets = column_budgets(total, d)
        donors = mar_donors(d, spec) if spec.kind is MissingKind.MAR else np.arange(d)
        for j in range(d):
            rng = _rng(spec, d + 1 + j)
            rows = _pick_rows(X[:, donors[j]], spec.rate, int(budgets[j]), rng)
            mask[rows, j] = False
    return complete.with_values(X, mask)


def count_unique_missing_patterns(r) -> int:
    """Number of distinct row patterns of a response indicator (or a DataMatrix's mask)."""
    m = r.mask if isinstance(r, DataMatrix) else np.asarray(r)
    if m.size == 0:
        return 0
    return int(np.unique(m.astype(np.int8), axis=0).shape[0])


def pattern_count_curve(complete: DataMatrix, kind, rates, seed: int = 0):
    """``[(rate, unique pattern count), ...]`` for a sweep of missing rates."""
    out = []
    for rate in rates:
        amp = amputate(complete, MissingnessSpec(kind, rate, seed))
        out.append((rate, count_unique_missing_patterns(amp)))
    return out
