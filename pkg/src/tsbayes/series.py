"""Univariate series container, differencing and seasonal design helpers."""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

__all__ = [
    "TimeSeries",
    "RegressorMatrix",
    "difference",
    "undifference",
    "difference_columns",
    "fourier_terms",
    "acf",
    "pacf",
    "load_csv",
]


@dataclass
class TimeSeries:
    """A univariate series with a sampling period.

    Parameters
    ----------
    values : array_like
        Observations, oldest first. Must be finite.
    frequency : int
        Observations per seasonal cycle (12 for monthly data with a yearly
        cycle, 1 for non-seasonal data).
    name : str
        Label used in printed output.
    """

    values: np.ndarray
    frequency: int = 1
    name: str = "y"

    def __post_init__(self) -> None:
        self.values = np.asarray(self.values, dtype=float)
        if self.values.ndim != 1:
            raise ValueError("series values must be one dimensional")
        if self.values.size == 0:
            raise ValueError("series is empty")
        if not np.all(np.isfinite(self.values)):
            raise ValueError("series contains non-finite values")
        if int(self.frequency) != self.frequency or self.frequency < 1:
            raise ValueError("frequency must be a positive integer")
        self.frequency = int(self.frequency)

    def __len__(self) -> int:
        return self.values.size


@dataclass
class RegressorMatrix:
    """Design matrix of external regressors aligned with a series."""

    values: np.ndarray
    labels: list[str] = field(default_factory=list)

    def __post_init__(self) -> None:
        self.values = np.asarray(self.values, dtype=float)
        if self.values.ndim == 1:
            self.values = self.values[:, None]
        if self.values.ndim != 2:
            raise ValueError("regressor matrix must be two dimensional")
        if not np.all(np.isfinite(self.values)):
            raise ValueError("regressor matrix contains non-finite values")
        if not self.labels:
            self.labels = [f"x{j + 1}" for j in range(self.values.shape[1])]
        if len(self.labels) != self.values.shape[1]:
            raise ValueError("one label per regressor column required")

    @property
    def n_columns(self) -> int:
        return self.values.shape[1]

    def __len__(self) -> int:
        return self.values.shape[0]


def _check_orders(n: int, d: int, period_d: int, s: int) -> None:
    if d < 0 or period_d < 0:
        raise ValueError("differencing orders must be non-negative")
    if s < 1:
        raise ValueError("seasonal period must be >= 1")
    if period_d > 0 and s < 2:
        raise ValueError("seasonal differencing requires a period >= 2")
    if n <= d + period_d * s:
        raise ValueError(
            f"series of length {n} too short for d={d}, D={period_d}, s={s}"
        )


def difference(y: np.ndarray, d: int, D: int, s: int) -> np.ndarray:
    """Apply D seasonal differences at period s, then d ordinary differences.

    Returns an array of length ``len(y) - d - D*s``.
    """
    y = np.asarray(y, dtype=float)
    _check_orders(y.size, d, D, s)
    out = y
    for _ in range(D):
        out = out[s:] - out[:-s]
    for _ in range(d):
        out = out[1:] - out[:-1]
    return out


def undifference(dy: np.ndarray, d: int, D: int, s: int, head: np.ndarray) -> np.ndarray:
    """Invert :func:`difference`, reconstructing the original scale.

    Parameters
    ----------
    dy : np.ndarray
        Differenced values.
    d, D, s : int
        Orders used to produce ``dy``.
    head : np.ndarray
        The first ``d + D*s`` values of the original series.

    Returns
    -------
    np.ndarray
        The full original series, length ``len(dy) + d + D*s``. Satisfies
        ``undifference(difference(y, d, D, s), d, D, s, y[:d + D*s]) == y``.
    """
    dy = np.asarray(dy, dtype=float)
    head = np.asarray(head, dtype=float)
    offset = d + D * s
    if head.size != offset:
        raise ValueError(f"head must supply the first {offset} original values")
    n = dy.size + offset
    _check_orders(n, d, D, s)
    y = np.empty(n)
    y[:offset] = head
    # (1-B)^d (1-B^s)^D y_t = dy_t, expanded into lag coefficients
    # (-1)^(i+j) C(d,i) C(D,j) at lag i + s*j; solve for y_t.
    terms = [
        (i + s * j, (-1.0) ** (i + j) * math.comb(d, i) * math.comb(D, j))
        for i in range(d + 1)
        for j in range(D + 1)
        if (i, j) != (0, 0)
    ]
    for t in range(offset, n):
        acc = dy[t - offset]
        for lag, coef in terms:
            acc -= coef * y[t - lag]
        y[t] = acc
    return y


def difference_columns(x: np.ndarray, d: int, D: int, s: int) -> np.ndarray:
    """Apply :func:`difference` to each column of a matrix."""
    x = np.asarray(x, dtype=float)
    if x.ndim != 2:
        raise ValueError("expected a two dimensional matrix")
    return np.column_stack([difference(x[:, j], d, D, s) for j in range(x.shape[1])])


def fourier_terms(n: int, s: int, K: int, start: int = 1) -> RegressorMatrix:
    """Seasonal Fourier design matrix.

    Column pairs sin(2*pi*k*t/s), cos(2*pi*k*t/s) for k = 1..K evaluated at
    t = start..start+n-1. With ``start = n0 + 1`` the matrix continues the
    phase of an n0-row matrix, which is what forecasting needs.

    Returns an n x 2K :class:`RegressorMatrix`. Requires ``2*K <= s``; at the
    Nyquist harmonic (2k = s) the sine column is identically zero but is kept
    so the shape contract holds.
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    if K < 1:
        raise ValueError("K must be >= 1")
    if 2 * K > s:
        raise ValueError(f"2*K must not exceed the period (got K={K}, s={s})")
    t = np.arange(start, start + n, dtype=float)
    cols = []
    labels = []
    for k in range(1, K + 1):
        w = 2.0 * np.pi * k / s
        cols.append(np.sin(w * t))
        cols.append(np.cos(w * t))
        labels.extend([f"sin{k}", f"cos{k}"])
    return RegressorMatrix(np.column_stack(cols), labels)


def acf(y: np.ndarray, max_lag: int) -> np.ndarray:
    """Sample autocorrelation at lags 0..max_lag (acf[0] is 1).

    Uses the biased estimator (denominator n), the convention under which
    the Durbin-Levinson recursion is stable.
    """
    y = np.asarray(y, dtype=float)
    n = y.size
    if not 0 < max_lag < n:
        raise ValueError("max_lag must satisfy 0 < max_lag < len(y)")
    yc = y - y.mean()
    c0 = float(yc @ yc)
    if c0 == 0.0:
        raise ValueError("constant series has undefined autocorrelation")
    out = np.empty(max_lag + 1)
    out[0] = 1.0
    for k in range(1, max_lag + 1):
        out[k] = float(yc[k:] @ yc[:-k]) / c0
    return out


def pacf(y: np.ndarray, max_lag: int) -> np.ndarray:
    """Sample partial autocorrelation at lags 0..max_lag via Durbin-Levinson.

    pacf[0] is 1 by convention; pacf[k] is the last coefficient of the
    order-k autoregression fitted to the autocorrelations.
    """
    r = acf(y, max_lag)
    out = np.empty(max_lag + 1)
    out[0] = 1.0
    phi_prev = np.zeros(0)
    for k in range(1, max_lag + 1):
        num = r[k] - phi_prev @ r[k - 1:0:-1] if k > 1 else r[1]
        den = 1.0 - phi_prev @ r[1:k] if k > 1 else 1.0
        if den == 0.0:
            raise ValueError(f"Durbin-Levinson breakdown at lag {k}")
        phi_kk = num / den
        phi = np.empty(k)
        phi[:-1] = phi_prev - phi_kk * phi_prev[::-1]
        phi[-1] = phi_kk
        out[k] = phi_kk
        phi_prev = phi
    return out


def load_csv(
    path: str | Path,
    column: int | str = 0,
    frequency: int = 1,
    header: bool = True,
    name: str | None = None,
) -> TimeSeries:
    """Read one numeric column of a CSV file as a :class:`TimeSeries`.

    ``column`` may be a zero-based index or, when ``header`` is true, a
    column name. Rows that do not parse as numbers raise an error naming
    the offending row.
    """
    path = Path(path)
    with path.open(newline="") as fh:
        reader = csv.reader(fh)
        rows = [row for row in reader if row and any(cell.strip() for cell in row)]
    if not rows:
        raise ValueError(f"{path}: no data rows")
    start = 0
    if header:
        head = rows[0]
        start = 1
        if isinstance(column, str):
            try:
                idx = [h.strip() for h in head].index(column)
            except ValueError:
                raise ValueError(f"{path}: no column named {column!r}") from None
        else:
            idx = int(column)
    else:
        if isinstance(column, str):
            raise ValueError("column names require header=True")
        idx = int(column)
    values = []
    for row_number, row in enumerate(rows[start:], start=start + 1):
        if idx >= len(row):
            raise ValueError(f"{path}: row {row_number} has no column {idx}")
        cell = row[idx].strip()
        try:
            values.append(float(cell))
        except ValueError:
            raise ValueError(
                f"{path}: non-numeric value {cell!r} in row {row_number}"
            ) from None
    if not values:
        raise ValueError(f"{path}: no data rows")
    label = name if name is not None else (column if isinstance(column, str) else "y")
    return TimeSeries(np.asarray(values), frequency=frequency, name=label)
