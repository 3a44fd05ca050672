"""Cyclic coordinate descent kernels for the weighted elastic net.

The objective, in Gram form with centered response y and design X
(G = X'X, c = X'y, yty = y'y), is

    f(b) = yty - 2 b'c + b'Gb + lam * sum_j w_j * (|b_j| / 2 + b_j**2 / 2)

whose coordinate-wise minimizer is

    b_j = soft(rho_j, lam * w_j / 4) / (G_jj + lam * w_j / 2),
    rho_j = c_j - sum_{k != j} G_jk b_k.

Status codes: 0 converged, 1 sweep budget exhausted, 2 objective rose
between sweeps (should never happen for a convex objective; reported so
the caller can fail loudly instead of returning garbage).
"""

import numpy as np
from numba import njit

STATUS_OK = 0
STATUS_MAX_SWEEPS = 1
STATUS_OBJECTIVE_ROSE = 2


@njit(cache=True, nogil=True)
def enet_cd(G, c, yty, w, lam, beta, tol, max_sweeps):  # pragma: no cover - jitted
    """Run coordinate descent in place on `beta`.

    Returns (sweeps, last_max_change, objective, status).
    """
    k_dim = c.shape[0]
    gb = G @ beta  # maintained as G @ beta throughout
    prev_obj = np.inf
    last_change = np.inf
    obj = np.inf
    status = STATUS_MAX_SWEEPS
    sweeps = 0
    for _ in range(max_sweeps):
        max_change = 0.0
        for j in range(k_dim):
            old = beta[j]
            rho = c[j] - gb[j] + G[j, j] * old
            thr = 0.25 * lam * w[j]
            denom = G[j, j] + 0.5 * lam * w[j]
            if denom <= 0.0:
                new = 0.0
            elif rho > thr:
                new = (rho - thr) / denom
            elif rho < -thr:
                new = (rho + thr) / denom
            else:
                new = 0.0
            delta = new - old
            if delta != 0.0:
                beta[j] = new
                for k in range(k_dim):
                    gb[k] += delta * G[k, j]
                if abs(delta) > max_change:
                    max_change = abs(delta)
        quad = 0.0
        lin = 0.0
        pen = 0.0
        for k in range(k_dim):
            quad += beta[k] * gb[k]
            lin += beta[k] * c[k]
            pen += w[k] * (0.5 * abs(beta[k]) + 0.5 * beta[k] * beta[k])
        obj = yty - 2.0 * lin + quad + lam * pen
        sweeps += 1
        last_change = max_change
        if obj > prev_obj + 1e-10 * (1.0 + abs(prev_obj)):
            status = STATUS_OBJECTIVE_ROSE
            break
        prev_obj = obj
        if max_change < tol:
            status = STATUS_OK
            break
    return sweeps, last_change, obj, status


@njit(cache=True, nogil=True)
def enet_path(G, c, yty, w, lambdas, tol, max_sweeps):  # pragma: no cover - jitted
    """Warm-started descent along a descending penalty grid.

    Returns (betas, n_done, status); betas holds one solution per grid
    point. On a non-zero status, n_done is the index of the failing fit.
    """
    n_lam = lambdas.shape[0]
    k_dim = c.shape[0]
    betas = np.zeros((n_lam, k_dim))
    beta = np.zeros(k_dim)
    for i in range(n_lam):
        _, _, _, status = enet_cd(G, c, yty, w, lambdas[i], beta, tol, max_sweeps)
        if status != STATUS_OK:
            return betas, i, status
        betas[i] = beta
    return betas, n_lam, STATUS_OK


def enet_objective(G, c, yty, w, lam, beta):
    """Exact objective value; used by tests and diagnostics."""
    quad = float(beta @ (G @ beta))
    lin = float(beta @ c)
    pen = float(np.sum(w * (0.5 * np.abs(beta) + 0.5 * beta**2)))
    return yty - 2.0 * lin + quad + lam * pen
