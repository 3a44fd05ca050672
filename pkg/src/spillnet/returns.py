"""Price ingestion and weekly return construction.

Daily price panels are turned into daily log returns (with forward-filled
prices across market holidays), cumulated into weekly returns over
Thursday-through-Wednesday windows anchored on the calendar Wednesday, and
summarized with annualized moment statistics.
"""

from __future__ import annotations

import csv
import datetime as dt
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np

from ._format import fmt
from .errors import DataError

_WEDNESDAY = 2  # datetime.weekday() convention, Monday == 0

STATS_COLUMNS = ("label", "mean", "std", "info", "skew", "kurt")


def _check_axes(dates: Sequence[dt.date], labels: Sequence[str], values: np.ndarray) -> None:
    if values.ndim != 2:
        raise DataError("panel values must be a 2-d array")
    if len(dates) != values.shape[0]:
        raise DataError(f"{len(dates)} dates for {values.shape[0]} rows")
    if len(labels) != values.shape[1]:
        raise DataError(f"{len(labels)} labels for {values.shape[1]} columns")
    if len(set(labels)) != len(labels):
        raise DataError("series labels must be unique")
    if any(not lab for lab in labels):
        raise DataError("series labels must be non-empty")
    for a, b in zip(dates, dates[1:]):
        if a >= b:
            raise DataError(f"dates must be strictly increasing (saw {a} then {b})")


@dataclass(frozen=True)
class PricePanel:
    """Daily price levels for N series; NaN cells mark missing observations."""

    dates: tuple[dt.date, ...]
    labels: tuple[str, ...]
    values: np.ndarray  # (T_d, N) float

    def __post_init__(self):
        values = np.asarray(self.values, dtype=float)
        object.__setattr__(self, "values", values)
        _check_axes(self.dates, self.labels, values)
        present = ~np.isnan(values)
        counts = present.sum(axis=0)
        for j, n_obs in enumerate(counts):
            if n_obs < 2:
                raise DataError(f"series {self.labels[j]!r} has {n_obs} prices; need at least 2")
        if np.any(values[present] <= 0.0):
            raise DataError("all present prices must be strictly positive")


@dataclass(frozen=True)
class DailyReturnPanel:
    """Daily log returns; NaN cells only where a series has not started yet."""

    dates: tuple[dt.date, ...]
    labels: tuple[str, ...]
    values: np.ndarray  # (T_d - 1, N) float

    def __post_init__(self):
        values = np.asarray(self.values, dtype=float)
        object.__setattr__(self, "values", values)
        _check_axes(self.dates, self.labels, values)


@dataclass(frozen=True)
class ReturnPanel:
    """Weekly log returns on a complete (no missing cells) T x N grid."""

    dates: tuple[dt.date, ...]
    labels: tuple[str, ...]
    values: np.ndarray  # (T, N) float

    def __post_init__(self):
        values = np.asarray(self.values, dtype=float)
        object.__setattr__(self, "values", values)
        _check_axes(self.dates, self.labels, values)
        if values.shape[0] < 1 or values.shape[1] < 1:
            raise DataError("weekly panel must have at least one row and one column")
        if not np.all(np.isfinite(values)):
            raise DataError("weekly panel must not contain missing or non-finite cells")

    @property
    def n_obs(self) -> int:
        return self.values.shape[0]

    @property
    def n_series(self) -> int:
        return self.values.shape[1]


@dataclass(frozen=True)
class SummaryStats:
    """Per-series moment statistics; mean/std annualized to percent."""

    labels: tuple[str, ...]
    mean: np.ndarray
    std: np.ndarray
    info: np.ndarray
    skew: np.ndarray
    kurt: np.ndarray


def _forward_fill(values: np.ndarray) -> np.ndarray:
    """Carry the last available observation forward, column by column."""
    t, n = values.shape
    row_idx = np.where(~np.isnan(values), np.arange(t)[:, None], 0)
    np.maximum.accumulate(row_idx, axis=0, out=row_idx)
    filled = values[row_idx, np.arange(n)[None, :]]
    return filled


def daily_log_returns(prices: PricePanel) -> DailyReturnPanel:
    """Difference log prices day over day.

    Missing prices are forward-filled with the most recent prior price
    before differencing, so a market holiday contributes a zero return and
    the first trading day after it carries the gap return. The first
    calendar row is dropped. Cells before a series' first observation stay
    missing.
    """
    filled = _forward_fill(prices.values)
    with np.errstate(invalid="ignore"):
        log_prices = np.log(filled)
    returns = log_prices[1:] - log_prices[:-1]
    return DailyReturnPanel(dates=prices.dates[1:], labels=prices.labels, values=returns)


def _week_anchor(day: dt.date) -> dt.date:
    """Calendar Wednesday ending the Thursday-through-Wednesday week of `day`."""
    return day + dt.timedelta(days=(_WEDNESDAY - day.weekday()) % 7)


def weekly_aggregate(daily: DailyReturnPanel) -> ReturnPanel:
    """Cumulate daily log returns into Thursday-through-Wednesday weeks.

    Each weekly return is the sum of the daily log returns dated inside the
    window ending on the anchor Wednesday (the anchor is the calendar
    Wednesday whether or not it was a trading day). Weeks whose calendar
    window sticks out past the available date range are dropped, as are
    weeks in which any series has no observation at all.
    """
    anchors: dict[dt.date, list[int]] = {}
    for idx, day in enumerate(daily.dates):
        anchors.setdefault(_week_anchor(day), []).append(idx)

    first, last = daily.dates[0], daily.dates[-1]
    week_dates: list[dt.date] = []
    week_rows: list[np.ndarray] = []
    for anchor in sorted(anchors):
        if anchor - dt.timedelta(days=6) < first or anchor > last:
            continue  # incomplete edge window
        block = daily.values[anchors[anchor]]
        observed = ~np.isnan(block)
        if np.any(observed.sum(axis=0) == 0):
            continue  # some series never traded this week; drop panel-wide
        week_dates.append(anchor)
        week_rows.append(np.nansum(block, axis=0))

    if not week_rows:
        raise DataError("no complete Thursday-through-Wednesday weeks in the input panel")
    return ReturnPanel(dates=tuple(week_dates), labels=daily.labels, values=np.vstack(week_rows))


def weekly_returns_from_prices(prices: PricePanel) -> ReturnPanel:
    """Convenience composition of `daily_log_returns` and `weekly_aggregate`."""
    return weekly_aggregate(daily_log_returns(prices))


def summary_stats(panel: ReturnPanel) -> SummaryStats:
    """Annualized summary statistics for each weekly return series.

    Mean is 100 * 52 * weekly mean, std is 100 * sqrt(52) * weekly sample
    standard deviation, info is their ratio. Skewness and kurtosis are the
    standardized third and fourth central sample moments of the weekly
    returns (kurtosis raw, not excess). Degenerate (zero variance) series
    report info, skew and kurt as missing.
    """
    t = panel.n_obs
    if t < 4:
        raise DataError(f"need at least 4 weekly observations for moment statistics, got {t}")
    x = panel.values
    m = x.mean(axis=0)
    centered = x - m
    m2 = (centered**2).mean(axis=0)
    m3 = (centered**3).mean(axis=0)
    m4 = (centered**4).mean(axis=0)
    sample_std = x.std(axis=0, ddof=1)
    constant = x.max(axis=0) == x.min(axis=0)  # exactly degenerate, not just tiny
    sample_std = np.where(constant, 0.0, sample_std)
    m2 = np.where(constant, 0.0, m2)

    mean_ann = 100.0 * 52.0 * m
    std_ann = 100.0 * math.sqrt(52.0) * sample_std
    with np.errstate(divide="ignore", invalid="ignore"):
        info = np.where(std_ann > 0.0, mean_ann / std_ann, np.nan)
        skew = np.where(m2 > 0.0, m3 / m2**1.5, np.nan)
        kurt = np.where(m2 > 0.0, m4 / m2**2, np.nan)
    return SummaryStats(labels=panel.labels, mean=mean_ann, std=std_ann, info=info, skew=skew, kurt=kurt)


def read_price_csv(path: str | Path, date_column: str = "date") -> PricePanel:
    """Load a daily price panel from CSV.

    Expected layout: header `date,<label1>,...,<labelN>`, one row per
    calendar day, ISO-8601 dates, empty cells for missing prices.
    """
    path = Path(path)
    with path.open(newline="", encoding="utf-8") as handle:
        reader = csv.reader(handle)
        try:
            header = next(reader)
        except StopIteration:
            raise DataError(f"{path}: empty file") from None
        if not header or header[0].strip() != date_column:
            raise DataError(f"{path}: first column must be {date_column!r}, got {header[:1]}")
        labels = tuple(h.strip() for h in header[1:])
        if not labels:
            raise DataError(f"{path}: no series columns")

        dates: list[dt.date] = []
        rows: list[list[float]] = []
        for lineno, row in enumerate(reader, start=2):
            if not row or all(not cell.strip() for cell in row):
                continue
            if len(row) != len(labels) + 1:
                raise DataError(f"{path}:{lineno}: expected {len(labels) + 1} cells, got {len(row)}")
            try:
                dates.append(dt.date.fromisoformat(row[0].strip()))
            except ValueError as exc:
                raise DataError(f"{path}:{lineno}: bad date {row[0]!r}: {exc}") from None
            parsed = []
            for cell, label in zip(row[1:], labels):
                cell = cell.strip()
                if not cell:
                    parsed.append(math.nan)
                    continue
                try:
                    parsed.append(float(cell))
                except ValueError:
                    raise DataError(f"{path}:{lineno}: bad price {cell!r} for {label}") from None
            rows.append(parsed)

    if not rows:
        raise DataError(f"{path}: no data rows")
    return PricePanel(dates=tuple(dates), labels=labels, values=np.array(rows, dtype=float))


def write_stats_csv(stats: SummaryStats, path: str | Path) -> None:
    """Write per-series summary statistics, 6 significant digits."""
    with Path(path).open("w", newline="", encoding="utf-8") as handle:
        handle.write(",".join(STATS_COLUMNS) + "\n")
        for j, label in enumerate(stats.labels):
            cells = [label] + [
                fmt(float(arr[j]), sig=6)
                for arr in (stats.mean, stats.std, stats.info, stats.skew, stats.kurt)
            ]
            handle.write(",".join(cells) + "\n")
