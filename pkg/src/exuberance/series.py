"""Core series container, fraction/index mapping, and CSV IO.

Conventions used across the package
-----------------------------------
Observations are numbered t = 1..T in formulas; in code they live in a
0-based float64 array, so observation t is ``values[t-1]``.  A window is
written (s, e] and holds observations s+1..e, i.e. ``values[s:e]``.
Fractional window bounds map to integer bounds through ``frac_to_index``
(floor), and the minimum admissible window spans ``frac_to_index(tau0, T)``
observations.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field

import numpy as np

from .exceptions import DataError

__all__ = [
    "Series",
    "WindowSpec",
    "DETERMINISTICS",
    "normalize_det",
    "frac_to_index",
    "default_min_window",
    "load_series",
    "save_series",
]

DETERMINISTICS = ("none", "const", "trend")

_DET_ALIASES = {
    "none": "none",
    "n": "none",
    "const": "const",
    "constant": "const",
    "c": "const",
    "trend": "trend",
    "ct": "trend",
    "constant+trend": "trend",
}


def normalize_det(det: str) -> str:
    """Normalize a deterministic-term spec to 'none', 'const' or 'trend'.

    'trend' always means intercept plus linear trend; there is no
    trend-without-intercept variant.
    """
    try:
        return _DET_ALIASES[str(det).strip().lower()]
    except KeyError:
        raise ValueError(
            f"unknown deterministic spec {det!r}; expected one of "
            f"{sorted(set(_DET_ALIASES))}"
        ) from None


def frac_to_index(tau: float, T: int) -> int:
    """Map a sample fraction to an observation count, floor(tau*T).

    A snap tolerance of 1e-9 absorbs the binary representation of decimal
    fractions (0.29 * 100 is stored as 28.999...96 and must map to 29).
    """
    if not 0.0 <= tau <= 1.0:
        raise ValueError(f"tau must lie in [0, 1], got {tau}")
    if T < 1:
        raise ValueError(f"T must be a positive integer, got {T}")
    return int(math.floor(tau * T + 1e-9))


def default_min_window(T: int) -> float:
    """Rule-of-thumb minimum window fraction, 0.01 + 1.8/sqrt(T), capped at 1."""
    if T < 4:
        raise ValueError(f"minimum-window rule needs T >= 4, got T={T}")
    return min(0.01 + 1.8 / math.sqrt(T), 1.0)


@dataclass
class Series:
    """A univariate time series with optional observation labels."""

    values: np.ndarray
    labels: list[str] | None = None
    name: str = "y"

    def __post_init__(self) -> None:
        v = np.asarray(self.values, dtype=np.float64)
        if v.ndim != 1:
            raise DataError(f"series values must be 1-dimensional, got shape {v.shape}")
        if v.size < 2:
            raise DataError(f"series needs at least 2 observations, got {v.size}")
        if not np.all(np.isfinite(v)):
            bad = int(np.flatnonzero(~np.isfinite(v))[0])
            raise DataError(f"series contains a non-finite value at position {bad}")
        self.values = v
        if self.labels is not None:
            if len(self.labels) != v.size:
                raise DataError(
                    f"labels length {len(self.labels)} does not match "
                    f"series length {v.size}"
                )
            self.labels = [str(x) for x in self.labels]

    def __len__(self) -> int:
        return int(self.values.size)


@dataclass(frozen=True)
class WindowSpec:
    """Fractional window (tau1, tau2] of the sample."""

    tau1: float
    tau2: float

    def __post_init__(self) -> None:
        if not 0.0 <= self.tau1 < 1.0:
            raise ValueError(f"tau1 must lie in [0, 1), got {self.tau1}")
        if not 0.0 < self.tau2 <= 1.0:
            raise ValueError(f"tau2 must lie in (0, 1], got {self.tau2}")
        if not self.tau1 < self.tau2:
            raise ValueError(f"tau1 < tau2 required, got ({self.tau1}, {self.tau2})")

    def indices(self, T: int) -> tuple[int, int]:
        """Integer bounds (s, e] of this window for a length-T sample."""
        return frac_to_index(self.tau1, T), frac_to_index(self.tau2, T)

    def length(self, T: int) -> int:
        s, e = self.indices(T)
        return e - s


def _parse_float(token: str, row: int, path: str) -> float:
    try:
        x = float(token)
    except ValueError:
        raise DataError(
            f"{path}: row {row}: cannot parse {token!r} as a number"
        ) from None
    if not math.isfinite(x):
        raise DataError(f"{path}: row {row}: non-finite value {token!r}")
    return x


def load_series(
    path: str,
    column: int | str | None = None,
    label_column: int | str | None = None,
    name: str | None = None,
) -> Series:
    """Load a series from a CSV file (UTF-8).

    Parameters
    ----------
    path : str
        CSV file path.
    column : int or str, optional
        Value column, by 0-based position or by header name.  Defaults to
        the only column of a single-column file, else the last column.
    label_column : int or str, optional
        Optional label column (dates etc.), by position or header name.
    name : str, optional
        Series name; defaults to the value column's header if present.

    Raises
    ------
    DataError
        On unreadable files, unknown columns, unparseable or non-finite
        numbers (the error names the offending row), or fewer than 2 data
        rows.
    """
    try:
        with open(path, "r", encoding="utf-8", newline="") as fh:
            rows = [r for r in csv.reader(fh) if r and any(c.strip() for c in r)]
    except OSError as exc:
        raise DataError(f"cannot read {path}: {exc}") from None
    if not rows:
        raise DataError(f"{path}: file is empty")

    header: list[str] | None = None
    first = rows[0]
    probe = first[-1] if column is None or isinstance(column, str) else None
    if isinstance(column, str) or isinstance(label_column, str):
        header = [c.strip() for c in first]
    else:
        target = first[column] if isinstance(column, int) and column < len(first) else probe
        try:
            float(target if target is not None else first[-1])
        except (ValueError, TypeError):
            header = [c.strip() for c in first]
    data_rows = rows[1:] if header is not None else rows
    start_row = 2 if header is not None else 1

    def resolve(col: int | str | None, default: int | None) -> int | None:
        if col is None:
            return default
        if isinstance(col, int):
            return col
        if header is None or col not in header:
            raise DataError(f"{path}: no column named {col!r} (header: {header})")
        return header.index(col)

    ncol = len(first)
    vcol = resolve(column, ncol - 1 if ncol > 1 else 0)
    lcol = resolve(label_column, None)

    values: list[float] = []
    labels: list[str] = []
    for i, row in enumerate(data_rows):
        rnum = start_row + i
        if vcol >= len(row):
            raise DataError(f"{path}: row {rnum}: missing column {vcol}")
        values.append(_parse_float(row[vcol].strip(), rnum, path))
        if lcol is not None:
            if lcol >= len(row):
                raise DataError(f"{path}: row {rnum}: missing label column {lcol}")
            labels.append(row[lcol].strip())
    if len(values) < 2:
        raise DataError(f"{path}: need at least 2 data rows, got {len(values)}")

    if name is None:
        name = header[vcol] if header is not None else "y"
    return Series(
        values=np.asarray(values, dtype=np.float64),
        labels=labels if lcol is not None else None,
        name=name or "y",
    )


def save_series(path: str, series: Series) -> None:
    """Write a series as CSV; numbers carry 17 significant digits so that
    ``load_series`` round-trips them bit-exactly."""
    with open(path, "w", encoding="utf-8", newline="") as fh:
        w = csv.writer(fh)
        if series.labels is not None:
            w.writerow(["label", series.name])
            for lab, v in zip(series.labels, series.values):
                w.writerow([lab, format(v, ".17g")])
        else:
            w.writerow([series.name])
            for v in series.values:
                w.writerow([format(v, ".17g")])


def as_values(data: "Series | np.ndarray | list") -> np.ndarray:
    """Coerce a Series or array-like to a validated float64 array."""
    if isinstance(data, Series):
        return data.values
    return Series(values=np.asarray(data, dtype=np.float64)).values
