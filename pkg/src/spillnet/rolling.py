"""Rolling re-estimation of the full pipeline over sliding windows."""

from __future__ import annotations

import datetime as dt
import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .connect import ConnectednessReport, measures, vd, vd_ordering_averaged
from .errors import DataError, SpillnetError
from .identify import SCHEMES, ClusterSpec, ma_coefficients, make_identification
from .returns import ReturnPanel
from .varnet import fit_var

logger = logging.getLogger(__name__)

ORDER_AVERAGE = "average"


@dataclass(frozen=True)
class RollingConfig:
    """Window geometry and per-window estimation settings."""

    window: int
    step: int = 1
    horizon: int = 12
    lag_order: int = 3
    schemes: tuple[str, ...] = ("clustered", "generalized")
    ordering: tuple[str, ...] | str | None = None  # explicit order or "average"
    workers: int = 1
    folds: int = 10

    def __post_init__(self):
        object.__setattr__(self, "schemes", tuple(dict.fromkeys(self.schemes)))
        if self.window <= self.lag_order + 10:
            raise DataError(
                f"window {self.window} must exceed lag order {self.lag_order} plus 10"
            )
        if self.step < 1:
            raise DataError("step must be at least 1")
        if self.horizon < 1:
            raise DataError("horizon must be at least 1")
        unknown = set(self.schemes) - set(SCHEMES)
        if unknown:
            raise DataError(f"unknown schemes {sorted(unknown)}")
        if not self.schemes:
            raise DataError("at least one identification scheme is required")


@dataclass
class MeasureSeries:
    """Per-window connectedness reports on a common window-end date axis.

    `reports[scheme][k]` is the k-th window's report, or None when that
    window's estimation failed (failures are diagnostics, not aborts).
    """

    dates: tuple[dt.date, ...]
    schemes: tuple[str, ...]
    reports: dict[str, list[ConnectednessReport | None]]
    diagnostics: tuple[str, ...] = field(default_factory=tuple)

    def series(self, scheme: str, attr: str) -> np.ndarray:
        """One scalar measure as a float series (NaN where a window failed)."""
        if scheme not in self.reports:
            raise DataError(f"scheme {scheme!r} not present in this series")
        out = np.full(len(self.dates), np.nan)
        for k, report in enumerate(self.reports[scheme]):
            if report is not None:
                out[k] = getattr(report, attr)
        return out


def window_measures(
    panel_values: np.ndarray,
    labels: tuple[str, ...],
    dates: tuple[dt.date, ...],
    spec: ClusterSpec,
    cfg: RollingConfig,
) -> dict[str, ConnectednessReport]:
    """Fit one window and compute measures for every requested scheme."""
    window_panel = ReturnPanel(dates=dates, labels=labels, values=panel_values)
    model = fit_var(window_panel, cfg.lag_order, folds=cfg.folds)
    ma = ma_coefficients(model, cfg.horizon)
    out: dict[str, ConnectednessReport] = {}
    for scheme in cfg.schemes:
        if scheme == "clustered" and cfg.ordering == ORDER_AVERAGE:
            vdm = vd_ordering_averaged(ma, model.sigma, spec, cfg.horizon, labels=labels)
        else:
            order = cfg.ordering if scheme == "clustered" else None
            ident = make_identification(model.sigma, scheme, spec=spec, order=order)
            vdm = vd(ma, ident, cfg.horizon, labels=labels)
        out[scheme] = measures(vdm, spec)
    return out


def roll(panel: ReturnPanel, spec: ClusterSpec, cfg: RollingConfig) -> MeasureSeries:
    """Re-estimate the pipeline on every sliding window of the panel.

    Window k covers rows [k * step, k * step + window); its reports are
    dated by the window's last observation. Individual window failures are
    recorded as gaps with a diagnostic message; only a panel with zero
    successful windows raises.
    """
    t = panel.n_obs
    if t < cfg.window:
        raise DataError(f"panel has {t} rows; rolling window needs at least {cfg.window}")
    if "clustered" in cfg.schemes and cfg.ordering is None and spec.order is None:
        raise DataError("clustered rolling needs a cluster ordering (or 'average')")
    ends = list(range(cfg.window, t + 1, cfg.step))
    dates = tuple(panel.dates[e - 1] for e in ends)

    def one_window(end: int):
        rows = slice(end - cfg.window, end)
        return window_measures(
            panel.values[rows], panel.labels, panel.dates[rows], spec, cfg
        )

    results: list[dict[str, ConnectednessReport] | Exception] = []
    if cfg.workers > 1:
        def guarded(end):
            try:
                return one_window(end)
            except SpillnetError as exc:
                return exc
        with ThreadPoolExecutor(max_workers=cfg.workers) as pool:
            results = list(pool.map(guarded, ends))
    else:
        for end in ends:
            try:
                results.append(one_window(end))
            except SpillnetError as exc:
                results.append(exc)

    reports: dict[str, list[ConnectednessReport | None]] = {s: [] for s in cfg.schemes}
    diagnostics: list[str] = []
    n_ok = 0
    for end, result in zip(ends, results):
        if isinstance(result, Exception):
            date = panel.dates[end - 1]
            diagnostics.append(f"window ending {date}: {result}")
            logger.warning("rolling window ending %s failed: %s", date, result)
            for s in cfg.schemes:
                reports[s].append(None)
        else:
            n_ok += 1
            for s in cfg.schemes:
                reports[s].append(result[s])
    if n_ok == 0:
        raise DataError("every rolling window failed; see diagnostics")
    return MeasureSeries(
        dates=dates, schemes=cfg.schemes, reports=reports, diagnostics=tuple(diagnostics)
    )


def difference_series(series: MeasureSeries) -> dict[str, np.ndarray]:
    """Pointwise generalized-minus-clustered curves.

    Keys `total`, `within`, `cross` map to exact float subtractions of the
    two underlying series; windows missing in either scheme are NaN.
    """
    for scheme in ("generalized", "clustered"):
        if scheme not in series.reports:
            raise DataError(f"difference series needs scheme {scheme!r}")
    return {
        "total": series.series("generalized", "system_wide")
        - series.series("clustered", "system_wide"),
        "within": series.series("generalized", "within_cluster")
        - series.series("clustered", "within_cluster"),
        "cross": series.series("generalized", "cross_cluster")
        - series.series("clustered", "cross_cluster"),
    }
