"""Shock identification: moving-average weights and the cluster transform.

Three schemes are supported for turning reduced-form shocks with covariance
sigma into structural shocks with covariance omega = q^{-1} sigma q^{-T}:

* orthogonalized: q is the Cholesky factor, omega the identity;
* generalized: q is the identity, omega = sigma;
* clustered: q^{-1} removes correlation across (but not within) ordered
  clusters by sequential linear projection, leaving omega block diagonal.
"""

from __future__ import annotations

import itertools
import logging
from dataclasses import dataclass, replace
from typing import Iterable, Mapping, Sequence

import numpy as np
import scipy.linalg

from .errors import DataError, EstimationError

logger = logging.getLogger(__name__)

SCHEMES = ("orthogonalized", "generalized", "clustered")

# Escalating diagonal jitter (relative to mean diagonal mass) applied when a
# factorization or projection hits a numerically non-PD covariance.
_JITTER_SCALES = (0.0, 1e-10, 1e-9, 1e-8, 1e-7, 1e-6)


@dataclass(frozen=True)
class ClusterSpec:
    """Partition of the series into named clusters, optionally ordered.

    `assignments[i]` is the cluster id of series position i; `order` fixes
    the causal ordering across clusters and may be omitted when every
    ordering will be averaged over downstream.
    """

    assignments: tuple[str, ...]
    order: tuple[str, ...] | None = None
    labels: tuple[str, ...] | None = None

    def __post_init__(self):
        object.__setattr__(self, "assignments", tuple(self.assignments))
        if not self.assignments:
            raise DataError("cluster spec must cover at least one series")
        ids = set(self.assignments)
        if self.order is not None:
            object.__setattr__(self, "order", tuple(self.order))
            if len(set(self.order)) != len(self.order):
                raise DataError("cluster order must not repeat cluster ids")
            if set(self.order) != ids:
                raise DataError(
                    f"cluster order {self.order} does not match cluster ids {sorted(ids)}"
                )
        if self.labels is not None:
            object.__setattr__(self, "labels", tuple(self.labels))
            if len(self.labels) != len(self.assignments):
                raise DataError("labels and assignments must have the same length")

    @property
    def n_series(self) -> int:
        return len(self.assignments)

    @property
    def cluster_ids(self) -> tuple[str, ...]:
        """Cluster ids in causal order when set, else first appearance."""
        if self.order is not None:
            return self.order
        return tuple(dict.fromkeys(self.assignments))

    def members(self, cluster_id: str) -> np.ndarray:
        idx = [i for i, c in enumerate(self.assignments) if c == cluster_id]
        if not idx:
            raise DataError(f"unknown cluster id {cluster_id!r}")
        return np.array(idx, dtype=int)

    def sizes(self) -> dict[str, int]:
        return {cid: len(self.members(cid)) for cid in self.cluster_ids}

    @classmethod
    def from_labels(
        cls,
        groups: Mapping[str, Sequence[str]],
        labels: Sequence[str],
        order: Iterable[str] | None = None,
    ) -> "ClusterSpec":
        """Build a spec from cluster-name -> member-label lists."""
        position = {lab: i for i, lab in enumerate(labels)}
        assignments: list[str | None] = [None] * len(labels)
        for cid, members in groups.items():
            for lab in members:
                if lab not in position:
                    raise DataError(f"cluster {cid!r} references unknown series {lab!r}")
                if assignments[position[lab]] is not None:
                    raise DataError(f"series {lab!r} assigned to more than one cluster")
                assignments[position[lab]] = cid
        missing = [lab for lab, i in position.items() if assignments[i] is None]
        if missing:
            raise DataError(f"series not assigned to any cluster: {missing}")
        return cls(
            assignments=tuple(assignments),  # type: ignore[arg-type]
            order=tuple(order) if order is not None else None,
            labels=tuple(labels),
        )


@dataclass(frozen=True)
class MaCoefficients:
    """Moving-average weight matrices A_0 .. A_{H-1} of the fitted system."""

    coeffs: np.ndarray  # (H, N, N)

    def __post_init__(self):
        coeffs = np.asarray(self.coeffs, dtype=float)
        object.__setattr__(self, "coeffs", coeffs)
        n = coeffs.shape[1]
        if coeffs.ndim != 3 or coeffs.shape[2] != n:
            raise DataError("MA coefficients must be a (H, N, N) array")
        if not np.array_equal(coeffs[0], np.eye(n)):
            raise EstimationError("horizon-0 MA coefficient must be the identity")
        if not np.all(np.isfinite(coeffs)):
            raise EstimationError("MA coefficients must be finite")

    @property
    def horizons(self) -> int:
        return self.coeffs.shape[0]


@dataclass(frozen=True)
class Identification:
    """Shock transform q with structural covariance omega for one scheme."""

    scheme: str
    q: np.ndarray
    omega: np.ndarray
    sigma: np.ndarray
    cluster: ClusterSpec | None = None
    q_inv: np.ndarray | None = None

    def __post_init__(self):
        if self.scheme not in SCHEMES:
            raise DataError(f"unknown identification scheme {self.scheme!r}")


def ma_coefficients(model_or_phi, horizon: int) -> MaCoefficients:
    """Moving-average recursion A_0 = I, A_h = sum_p phi_p A_{h-p}.

    Accepts a fitted model or the stacked (P, N, N) lag coefficient array
    directly; terms with negative index are zero.
    """
    if horizon < 1:
        raise DataError("horizon must be at least 1")
    phi = np.asarray(getattr(model_or_phi, "phi", model_or_phi), dtype=float)
    if phi.ndim != 3 or phi.shape[1] != phi.shape[2]:
        raise DataError("lag coefficients must be a (P, N, N) array")
    p_lags, n, _ = phi.shape
    coeffs = np.zeros((horizon, n, n))
    coeffs[0] = np.eye(n)
    for h in range(1, horizon):
        acc = np.zeros((n, n))
        for p in range(1, min(p_lags, h) + 1):
            acc += phi[p - 1] @ coeffs[h - p]
        coeffs[h] = acc
    return MaCoefficients(coeffs=coeffs)


def _symmetrize(sigma: np.ndarray) -> np.ndarray:
    sigma = np.asarray(sigma, dtype=float)
    if sigma.ndim != 2 or sigma.shape[0] != sigma.shape[1]:
        raise DataError("covariance must be a square matrix")
    return 0.5 * (sigma + sigma.T)


def cholesky_factor(sigma: np.ndarray) -> np.ndarray:
    """Lower-triangular M with positive diagonal and M M' = sigma.

    A nearly-but-not-quite PD input (short rolling windows) gets an
    escalating diagonal jitter before we give up; every jitter application
    is logged. Failure reports the offending leading minor.
    """
    sigma = _symmetrize(sigma)
    n = sigma.shape[0]
    base = np.trace(sigma) / n
    info = -1
    for scale in _JITTER_SCALES:
        attempt = sigma if scale == 0.0 else sigma + (scale * base) * np.eye(n)
        factor, info = scipy.linalg.lapack.dpotrf(attempt, lower=1)
        if info == 0:
            if scale != 0.0:
                logger.warning("cholesky_factor: applied diagonal jitter %.1e", scale * base)
            return np.tril(factor)
        if base <= 0.0:
            break
    raise EstimationError(
        f"covariance is not positive definite (leading minor of order {info} failed)"
    )


def block_inverse_2x2(sigma: np.ndarray, n_first: int):
    """Partitioned inverse of a 2x2 block matrix via its Schur complement.

    With sigma = [[A, B], [C, D]] split after `n_first` rows/columns and
    K = (D - C A^{-1} B)^{-1}, the blocks of the inverse are

        [[A^{-1} + A^{-1} B K C A^{-1},  -A^{-1} B K],
         [-K C A^{-1},                    K         ]].

    Returns the four blocks (top-left, top-right, bottom-left, bottom-right).
    """
    sigma = np.asarray(sigma, dtype=float)
    n = sigma.shape[0]
    if not 0 < n_first < n:
        raise DataError(f"block split {n_first} must lie strictly inside 0..{n}")
    a = sigma[:n_first, :n_first]
    b = sigma[:n_first, n_first:]
    c = sigma[n_first:, :n_first]
    d = sigma[n_first:, n_first:]
    try:
        a_inv = np.linalg.inv(a)
    except np.linalg.LinAlgError as exc:
        raise EstimationError(f"leading block is singular: {exc}") from exc
    a_inv_b = a_inv @ b
    c_a_inv = c @ a_inv
    try:
        schur_inv = np.linalg.inv(d - c @ a_inv_b)
    except np.linalg.LinAlgError as exc:
        raise EstimationError(f"Schur complement is singular: {exc}") from exc
    top_left = a_inv + a_inv_b @ schur_inv @ c_a_inv
    top_right = -a_inv_b @ schur_inv
    bottom_left = -schur_inv @ c_a_inv
    return top_left, top_right, bottom_left, schur_inv


def _cluster_permutation(spec: ClusterSpec, order: Sequence[str]) -> np.ndarray:
    blocks = [spec.members(cid) for cid in order]
    return np.concatenate(blocks)


def _build_clusterizer(sigma_p: np.ndarray, sizes: Sequence[int]) -> np.ndarray:
    """Unit-lower-block-triangular q^{-1} in the cluster-sorted basis.

    Block row r carries minus the coefficients of the joint projection of
    that cluster's shocks on all earlier-ordered clusters.
    """
    n = sigma_p.shape[0]
    q_inv = np.eye(n)
    offset = sizes[0]
    for size in sizes[1:]:
        cur = slice(offset, offset + size)
        proj = np.linalg.solve(sigma_p[:offset, :offset], sigma_p[:offset, cur])
        q_inv[cur, :offset] = -proj.T
        offset += size
    return q_inv


def clusterizer(
    sigma: np.ndarray, spec: ClusterSpec, order: Sequence[str] | None = None
) -> Identification:
    """Clustered identification for the given causal ordering of clusters.

    The first-ordered cluster's shocks pass through untouched; each later
    cluster's shocks are the residuals of a joint projection on all
    earlier-ordered clusters, so omega is block diagonal across clusters
    while within-cluster covariance is preserved.
    """
    sigma = _symmetrize(sigma)
    if order is None:
        order = spec.order
    if order is None:
        raise DataError("clustered identification needs a cluster ordering")
    order = tuple(order)
    if spec.n_series != sigma.shape[0]:
        raise DataError(
            f"cluster spec covers {spec.n_series} series but sigma is {sigma.shape[0]}-dimensional"
        )
    perm = _cluster_permutation(spec, order)
    sizes = [len(spec.members(cid)) for cid in order]
    sigma_p = sigma[np.ix_(perm, perm)]

    n = sigma.shape[0]
    base = np.trace(sigma) / n
    last_error: Exception | None = None
    q_inv_p = None
    for scale in _JITTER_SCALES:
        attempt = sigma_p if scale == 0.0 else sigma_p + (scale * base) * np.eye(n)
        try:
            q_inv_p = _build_clusterizer(attempt, sizes)
        except np.linalg.LinAlgError as exc:
            last_error = exc
            if base <= 0.0:
                break
            continue
        if scale != 0.0:
            logger.warning("clusterizer: applied diagonal jitter %.1e", scale * base)
        break
    if q_inv_p is None:
        raise EstimationError(f"singular leading cluster covariance: {last_error}")

    omega_p = q_inv_p @ sigma_p @ q_inv_p.T
    omega_p = 0.5 * (omega_p + omega_p.T)
    if scale == 0.0:
        # off-cluster blocks must vanish to round-off; a gross violation
        # means the projection solves returned garbage (near-singular input)
        peak = float(np.diag(omega_p).max())
        block_mask = np.zeros((n, n), dtype=bool)
        offset = 0
        for size in sizes:
            block_mask[offset : offset + size, offset : offset + size] = True
            offset += size
        worst = float(np.abs(omega_p[~block_mask]).max()) if n > sizes[0] else 0.0
        if peak <= 0.0 or worst > 1e-8 * peak:
            raise EstimationError(
                f"cluster orthogonalization failed: residual cross-cluster "
                f"covariance {worst:.3e} vs peak variance {peak:.3e}"
            )
    q_p = scipy.linalg.solve_triangular(
        q_inv_p, np.eye(n), lower=True, unit_diagonal=True
    )

    inv_perm = np.empty(n, dtype=int)
    inv_perm[perm] = np.arange(n)
    back = np.ix_(inv_perm, inv_perm)
    return Identification(
        scheme="clustered",
        q=q_p[back],
        omega=omega_p[back],
        sigma=sigma,
        cluster=replace(spec, order=order),
        q_inv=q_inv_p[back],
    )


def make_identification(
    sigma: np.ndarray,
    scheme: str,
    spec: ClusterSpec | None = None,
    order: Sequence[str] | None = None,
) -> Identification:
    """Build the (q, omega) pair for one identification scheme."""
    sigma = _symmetrize(sigma)
    n = sigma.shape[0]
    if scheme == "orthogonalized":
        return Identification(
            scheme=scheme, q=cholesky_factor(sigma), omega=np.eye(n), sigma=sigma
        )
    if scheme == "generalized":
        return Identification(
            scheme=scheme, q=np.eye(n), omega=sigma.copy(), sigma=sigma, q_inv=np.eye(n)
        )
    if scheme == "clustered":
        if spec is None:
            raise DataError("clustered identification needs a cluster spec")
        return clusterizer(sigma, spec, order)
    raise DataError(f"unknown identification scheme {scheme!r}")


def cluster_orderings(spec: ClusterSpec) -> list[tuple[str, ...]]:
    """Every permutation of the cluster ids, in a deterministic order."""
    return [tuple(p) for p in itertools.permutations(spec.cluster_ids)]
