"""Shared helpers: panels on a Wednesday grid and random stable systems."""

import datetime as dt

import numpy as np
import pytest

from spillnet.identify import ClusterSpec
from spillnet.returns import ReturnPanel

FIRST_WEDNESDAY = dt.date(2010, 1, 6)


def wednesdays(count, start=FIRST_WEDNESDAY):
    return tuple(start + dt.timedelta(weeks=k) for k in range(count))


def make_panel(values, labels=None, start=FIRST_WEDNESDAY):
    values = np.asarray(values, dtype=float)
    if labels is None:
        labels = tuple(f"s{i}" for i in range(values.shape[1]))
    return ReturnPanel(dates=wednesdays(values.shape[0], start), labels=tuple(labels), values=values)


def companion(phi):
    """Companion matrix of the stacked (P, N, N) lag coefficients."""
    p, n, _ = phi.shape
    comp = np.zeros((n * p, n * p))
    comp[:n] = np.hstack(list(phi))
    if p > 1:
        comp[n:, :-n] = np.eye(n * (p - 1))
    return comp


def random_stable_var(rng, n, p, radius=0.7):
    """Lag coefficients rescaled so the companion spectral radius is `radius`."""
    phi = rng.normal(scale=1.0 / np.sqrt(n * p), size=(p, n, n))
    top = np.abs(np.linalg.eigvals(companion(phi))).max()
    if top > 0:
        scale = radius / top
        for lag in range(p):
            phi[lag] *= scale ** (lag + 1)
    return phi


def random_pd(rng, n):
    """Well-conditioned random covariance."""
    factor = rng.normal(size=(n, n + 2))
    return factor @ factor.T / (n + 2) + 0.25 * np.eye(n)


def random_cluster_spec(rng, n, labels=None):
    """Random partition into 2..min(4, n) non-empty clusters, random order."""
    n_clusters = int(rng.integers(2, min(4, n) + 1))
    ids = [f"c{k}" for k in range(n_clusters)]
    assignments = [ids[int(rng.integers(n_clusters))] for _ in range(n)]
    for k, cid in enumerate(ids):  # pin one member each so no cluster is empty
        assignments[k] = cid
    order = list(ids)
    rng.shuffle(order)
    return ClusterSpec(assignments=tuple(assignments), order=tuple(order), labels=labels)


def simulate_var(rng, phi, sigma, t, burn=200):
    """Sample a stationary path from the lag-P system with shock covariance sigma."""
    p, n, _ = phi.shape
    chol = np.linalg.cholesky(sigma)
    shocks = rng.normal(size=(t + burn, n)) @ chol.T
    path = np.zeros((t + burn, n))
    for step in range(t + burn):
        acc = shocks[step].copy()
        for lag in range(1, min(p, step) + 1):
            acc += phi[lag - 1] @ path[step - lag]
        path[step] = acc
    return path[burn:]


@pytest.fixture
def rng():
    return np.random.default_rng(20240901)
