"""Impulse responses, variance decompositions and connectedness measures.

The h-step response of series i to a one-standard-deviation structural
shock j is (A_h q omega)_{ij} / sqrt(omega_jj). Variance shares divide the
accumulated squared responses by the accumulated forecast-error variance
(A_h sigma A_h')_{ii} and are then row-normalized; a normalized share
matrix, read as a weighted directed network, yields the system-wide,
directional, and within/cross-cluster measures.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import DataError, EstimationError
from .identify import ClusterSpec, Identification, MaCoefficients, cluster_orderings, clusterizer

_ROWSUM_TOL = 1e-8
_IDENTITY_TOL = 1e-9


@dataclass(frozen=True)
class IrfSet:
    """Scaled impulse responses; responses[h, i, j] is series i's h-step
    move per one-standard-deviation shock associated with series j."""

    responses: np.ndarray  # (H, N, N)
    scheme: str

    def __post_init__(self):
        responses = np.asarray(self.responses, dtype=float)
        object.__setattr__(self, "responses", responses)
        if not np.all(np.isfinite(responses)):
            raise EstimationError("impulse responses must be finite")


@dataclass(frozen=True)
class VdMatrix:
    """Variance-decomposition matrix at one horizon, raw and row-normalized."""

    theta_raw: np.ndarray
    theta: np.ndarray
    horizon: int
    scheme: str
    ordering: tuple[str, ...] | str | None = None
    labels: tuple[str, ...] | None = None

    def __post_init__(self):
        theta_raw = np.asarray(self.theta_raw, dtype=float)
        theta = np.asarray(self.theta, dtype=float)
        object.__setattr__(self, "theta_raw", theta_raw)
        object.__setattr__(self, "theta", theta)
        if np.any(theta_raw < 0.0) or np.any(theta < 0.0):
            raise EstimationError("variance shares must be non-negative")
        row_gap = np.abs(theta.sum(axis=1) - 1.0).max()
        if row_gap > 1e-10:
            raise EstimationError(f"normalized shares must be row-stochastic (gap {row_gap:.3e})")

    @property
    def n_series(self) -> int:
        return self.theta.shape[0]


@dataclass(frozen=True)
class ConnectednessReport:
    """Aggregate network measures derived from one normalized share matrix.

    Percent-scale fields: system_wide, within_cluster, cross_cluster,
    to_others / from_others / net per node, regional_net per cluster.
    Fraction-scale fields: the per-cluster own / co-movement / received
    contagion shares, the cluster-pair contagion matrix (entry [c, k] is
    the share cluster c receives from cluster k, averaged over both
    cluster sizes), and their cross-cluster averages.
    """

    labels: tuple[str, ...]
    cluster_ids: tuple[str, ...]
    system_wide: float
    within_cluster: float
    cross_cluster: float
    to_others: np.ndarray
    from_others: np.ndarray
    net: np.ndarray
    own_share: np.ndarray
    comove_share: np.ndarray
    contagion_received: np.ndarray
    contagion_pairs: np.ndarray
    own_avg: float
    comove_avg: float
    contagion_avg: float
    regional_net: np.ndarray


def irf(ma: MaCoefficients, ident: Identification) -> IrfSet:
    """Responses to one-standard-deviation structural shocks.

    psi_j(h) = A_h q omega e_j / sqrt(omega_jj); for the orthogonalized
    scheme this collapses to A_h M e_j, for the generalized scheme to
    A_h sigma e_j / sqrt(sigma_jj).
    """
    omega_diag = np.diag(ident.omega)
    if np.any(omega_diag <= 0.0):
        raise EstimationError("structural shock variances must be strictly positive")
    loading = ident.q @ ident.omega
    scale = np.sqrt(omega_diag)
    responses = ma.coeffs @ loading / scale[None, None, :]
    return IrfSet(responses=responses, scheme=ident.scheme)


def forecast_error_variances(ma: MaCoefficients, sigma: np.ndarray, horizon: int) -> np.ndarray:
    """Per-series H-step forecast-error variances sum_h (A_h sigma A_h')_ii."""
    acc = np.zeros(sigma.shape[0])
    for h in range(horizon):
        a_h = ma.coeffs[h]
        acc += np.einsum("ij,jk,ik->i", a_h, sigma, a_h)
    return acc


def vd(
    ma: MaCoefficients,
    ident: Identification,
    horizon: int,
    labels: tuple[str, ...] | None = None,
) -> VdMatrix:
    """H-step variance-decomposition matrix under one identification.

    theta_raw[i, j] accumulates squared scaled responses of i to shock j
    over horizons 0..H-1, divided by i's accumulated forecast-error
    variance; theta row-normalizes theta_raw so each row sums to one.
    """
    if horizon < 1:
        raise DataError("horizon must be at least 1")
    if horizon > ma.horizons:
        raise DataError(f"MA coefficients cover {ma.horizons} horizons; need {horizon}")
    responses = irf(ma, ident).responses[:horizon]
    numerator = np.einsum("hij,hij->ij", responses, responses)
    fev = forecast_error_variances(ma, ident.sigma, horizon)
    if np.any(fev <= 0.0):
        raise EstimationError("zero forecast-error variance; shares undefined")
    theta_raw = numerator / fev[:, None]
    row_sums = theta_raw.sum(axis=1)
    if np.any(row_sums <= 0.0):
        raise EstimationError("share matrix has an all-zero row")
    ordering = ident.cluster.order if ident.cluster is not None else None
    return VdMatrix(
        theta_raw=theta_raw,
        theta=theta_raw / row_sums[:, None],
        horizon=horizon,
        scheme=ident.scheme,
        ordering=ordering,
        labels=labels,
    )


MAX_ENUMERATED_CLUSTERS = 8


def vd_ordering_averaged(
    ma: MaCoefficients,
    sigma: np.ndarray,
    spec: ClusterSpec,
    horizon: int,
    labels: tuple[str, ...] | None = None,
) -> VdMatrix:
    """Clustered shares averaged over every cluster ordering.

    Each ordering's normalized share matrix is computed and the matrices
    are averaged entrywise in a fixed enumeration order, so rows of the
    average still sum to one and the result is reproducible bit for bit.
    """
    orderings = cluster_orderings(spec)
    n_clusters = len(spec.cluster_ids)
    if n_clusters > MAX_ENUMERATED_CLUSTERS:
        raise DataError(
            f"{n_clusters}! orderings is too many to enumerate; supply an explicit cluster order"
        )
    theta_acc = None
    raw_acc = None
    for order in orderings:
        ident = clusterizer(sigma, spec, order)
        piece = vd(ma, ident, horizon)
        if theta_acc is None:
            theta_acc = piece.theta.copy()
            raw_acc = piece.theta_raw.copy()
        else:
            theta_acc += piece.theta
            raw_acc += piece.theta_raw
    count = float(len(orderings))
    return VdMatrix(
        theta_raw=raw_acc / count,
        theta=theta_acc / count,
        horizon=horizon,
        scheme="clustered",
        ordering="averaged",
        labels=labels,
    )


def _check_identity(value: float, target: float, what: str) -> None:
    if abs(value - target) > _IDENTITY_TOL:
        raise EstimationError(f"{what} identity violated: {value!r} vs {target!r}")


def measures(vdm: VdMatrix, spec: ClusterSpec) -> ConnectednessReport:
    """Aggregate a normalized share matrix into connectedness measures.

    Per cluster c (with members i and other clusters k):

    * own share: mean over i in c of theta_ii;
    * co-movement share: (1/N_c) sum over distinct i, j in c of theta_ij;
    * pair contagion [c, k]: (1/N_c) sum_i (1/N_k) sum_{j in k} theta_ij;
    * received contagion: (1/N_c) of all of c's out-of-cluster row mass,
      so own + comove + received = 1 for every row-stochastic theta
      regardless of cluster sizes (the pairwise entries carry an extra
      1/N_k and therefore do not add up to it when sizes exceed one).

    Percent measures scale sums of off-diagonal shares by 100/N (or
    100/N_c for the regional nets).
    """
    theta = vdm.theta
    n = theta.shape[0]
    if spec.n_series != n:
        raise DataError(f"cluster spec covers {spec.n_series} series; share matrix has {n}")
    if spec.labels is not None and vdm.labels is not None and tuple(spec.labels) != tuple(vdm.labels):
        raise DataError("cluster spec labels do not match share-matrix labels")
    row_gap = np.abs(theta.sum(axis=1) - 1.0).max()
    if row_gap > _ROWSUM_TOL:
        raise DataError(f"share matrix must be normalized (row-sum gap {row_gap:.3e})")

    labels = vdm.labels or (spec.labels or tuple(f"s{i}" for i in range(n)))
    cluster_ids = spec.cluster_ids
    members = {cid: spec.members(cid) for cid in cluster_ids}

    off_diag = theta - np.diag(np.diag(theta))
    to_others = 100.0 * off_diag.sum(axis=0)
    from_others = 100.0 * off_diag.sum(axis=1)
    net = to_others - from_others
    system_wide = 100.0 / n * off_diag.sum()

    codes = np.array([cluster_ids.index(c) for c in spec.assignments])
    same_cluster = codes[:, None] == codes[None, :]
    within = 100.0 / n * off_diag[same_cluster].sum()
    cross = 100.0 / n * off_diag[~same_cluster].sum()
    _check_identity(within + cross, system_wide, "within + cross = system-wide")

    n_clusters = len(cluster_ids)
    own = np.empty(n_clusters)
    comove = np.empty(n_clusters)
    received = np.empty(n_clusters)
    pairs = np.zeros((n_clusters, n_clusters))
    regional = np.empty(n_clusters)
    for ci, cid in enumerate(cluster_ids):
        idx = members[cid]
        size = idx.size
        block = theta[np.ix_(idx, idx)]
        own[ci] = np.trace(block) / size
        comove[ci] = (block.sum() - np.trace(block)) / size
        outside = np.setdiff1d(np.arange(n), idx)
        received[ci] = theta[np.ix_(idx, outside)].sum() / size
        for ki, kid in enumerate(cluster_ids):
            if kid == cid:
                continue
            kdx = members[kid]
            pairs[ci, ki] = theta[np.ix_(idx, kdx)].sum() / (size * kdx.size)
        sent = theta[np.ix_(outside, idx)].sum()
        regional[ci] = 100.0 / size * (sent - theta[np.ix_(idx, outside)].sum())
        _check_identity(own[ci] + comove[ci] + received[ci], 1.0, f"cluster {cid} share")

    own_avg = float(own.mean())
    comove_avg = float(comove.mean())
    contagion_avg = float(received.mean())
    _check_identity(own_avg + comove_avg + contagion_avg, 1.0, "average share")

    return ConnectednessReport(
        labels=tuple(labels),
        cluster_ids=cluster_ids,
        system_wide=float(system_wide),
        within_cluster=float(within),
        cross_cluster=float(cross),
        to_others=to_others,
        from_others=from_others,
        net=net,
        own_share=own,
        comove_share=comove,
        contagion_received=received,
        contagion_pairs=pairs,
        own_avg=own_avg,
        comove_avg=comove_avg,
        contagion_avg=contagion_avg,
        regional_net=regional,
    )


def _auto_bandwidth(values: np.ndarray) -> float:
    """Silverman's 1.06 * sd * n^(-1/5), floored at 1e-6 of the value range
    (with an absolute fallback when all values coincide)."""
    spread = float(values.max() - values.min())
    floor = 1e-6 * (spread if spread > 0.0 else max(1.0, float(np.abs(values).max())))
    return max(1.06 * float(values.std(ddof=1)) * values.size ** (-0.2), floor)


def kde_density(values: np.ndarray, grid: np.ndarray, bandwidth="auto") -> np.ndarray:
    """Gaussian kernel density of `values` evaluated on `grid`."""
    values = np.asarray(values, dtype=float).ravel()
    grid = np.asarray(grid, dtype=float).ravel()
    if values.size < 2:
        raise DataError("need at least 2 values for a density estimate")
    if bandwidth == "auto":
        bandwidth = _auto_bandwidth(values)
    bandwidth = float(bandwidth)
    if bandwidth <= 0.0:
        raise DataError("bandwidth must be strictly positive")
    z = (grid[:, None] - values[None, :]) / bandwidth
    scale = values.size * bandwidth * math.sqrt(2.0 * math.pi)
    return np.exp(-0.5 * z * z).sum(axis=1) / scale


def density_grid(values: np.ndarray, bandwidth="auto", points: int = 512) -> np.ndarray:
    """Evaluation grid spanning the data plus four bandwidths of margin."""
    values = np.asarray(values, dtype=float).ravel()
    if bandwidth == "auto":
        bandwidth = _auto_bandwidth(values)
    pad = 4.0 * float(bandwidth)
    return np.linspace(values.min() - pad, values.max() + pad, points)
