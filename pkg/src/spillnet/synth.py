"""Reproducible synthetic daily price panels for tests and demos.

The generating process is a daily lag-1 system with a block-structured
shock covariance: structural shocks are correlated inside clusters and
independent across them, a unit-lower-block-triangular mixing matrix loads
the first ("sender") cluster's shocks onto the others, and the lag matrix
adds dynamic sender-to-receiver coupling. Prices are exponentiated
cumulative returns on a weekday calendar, so the first cluster is both
contemporaneously and dynamically the source of cross-cluster co-movement.
"""

from __future__ import annotations

import datetime as dt
import string
from pathlib import Path

import numpy as np

from ._format import fmt
from .errors import DataError
from .returns import PricePanel

_DEFAULT_START = dt.date(2012, 1, 4)  # a Wednesday, so week windows align


def _weekday_calendar(start: dt.date, count: int) -> tuple[dt.date, ...]:
    days = []
    day = start
    while len(days) < count:
        if day.weekday() < 5:
            days.append(day)
        day += dt.timedelta(days=1)
    return tuple(days)


def synthetic_price_panel(
    weeks: int = 300,
    clusters: int = 3,
    series_per_cluster: int = 2,
    seed: int = 0,
    within_corr: float = 0.4,
    cross_loading: float = 0.35,
    lag_coupling: float = 0.05,
    own_lag: float = 0.1,
    daily_vol: float = 0.012,
    start: dt.date = _DEFAULT_START,
    burn_in: int = 250,
) -> PricePanel:
    """Simulate daily prices whose weekly returns have clustered structure.

    The panel starts on a Wednesday and covers `weeks` complete
    Thursday-through-Wednesday weeks of weekday prices (5 * weeks + 1
    rows). Cluster ids are letters A, B, C, ...; series labels are the
    cluster letter plus a 1-based position (A1, A2, B1, ...). The first
    cluster (A) is the sender.
    """
    if weeks < 1 or clusters < 1 or series_per_cluster < 1:
        raise DataError("weeks, clusters and series-per-cluster must be positive")
    if clusters > len(string.ascii_uppercase):
        raise DataError("at most 26 clusters supported")
    if start.weekday() != 2:
        raise DataError(f"start date {start} must be a Wednesday")
    if not 0.0 <= within_corr < 1.0:
        raise DataError("within-cluster correlation must lie in [0, 1)")

    n = clusters * series_per_cluster
    block = np.full((series_per_cluster, series_per_cluster), within_corr)
    np.fill_diagonal(block, 1.0)
    omega = np.kron(np.eye(clusters), block) * daily_vol**2

    mixing = np.eye(n)
    sender = np.arange(series_per_cluster)
    for c in range(1, clusters):
        rows = np.arange(c * series_per_cluster, (c + 1) * series_per_cluster)
        mixing[np.ix_(rows, sender)] = cross_loading / series_per_cluster

    phi = own_lag * np.eye(n)
    for c in range(1, clusters):
        rows = np.arange(c * series_per_cluster, (c + 1) * series_per_cluster)
        phi[np.ix_(rows, sender)] += lag_coupling / series_per_cluster

    top_eig = np.abs(np.linalg.eigvals(phi)).max()
    if top_eig >= 1.0:
        raise DataError(f"generating process is unstable (spectral radius {top_eig:.3f})")

    n_days = 5 * weeks
    rng = np.random.default_rng(seed)
    shocks = rng.multivariate_normal(np.zeros(n), omega, size=burn_in + n_days) @ mixing.T
    returns = np.zeros(n)
    path = np.empty((n_days, n))
    for t in range(burn_in + n_days):
        returns = phi @ returns + shocks[t]
        if t >= burn_in:
            path[t - burn_in] = returns

    log_prices = np.vstack([np.zeros(n), np.cumsum(path, axis=0)])
    prices = 100.0 * np.exp(log_prices)

    labels = tuple(
        f"{string.ascii_uppercase[c]}{k + 1}"
        for c in range(clusters)
        for k in range(series_per_cluster)
    )
    dates = _weekday_calendar(start, n_days + 1)
    return PricePanel(dates=dates, labels=labels, values=prices)


def cluster_groups(panel: PricePanel) -> dict[str, list[str]]:
    """Cluster-name -> member-label mapping implied by synthetic labels."""
    groups: dict[str, list[str]] = {}
    for label in panel.labels:
        groups.setdefault(label[0], []).append(label)
    return groups


def write_price_csv(panel: PricePanel, path) -> None:
    """Write a price panel in the CSV layout the pipeline ingests."""
    with Path(path).open("w", newline="", encoding="utf-8") as handle:
        handle.write("date," + ",".join(panel.labels) + "\n")
        for i, day in enumerate(panel.dates):
            cells = [day.isoformat()] + [fmt(v) for v in panel.values[i]]
            handle.write(",".join(cells) + "\n")
