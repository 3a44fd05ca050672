"""Equation-by-equation VAR estimation with an adaptive elastic net.

Each equation of the lag-P system is fit by penalized least squares

    sum_t (y_t - sum_i beta_i x_it)^2
        + lambda * sum_i w_i * (|beta_i| / 2 + beta_i**2 / 2),

with inverse-OLS-magnitude weights w_i, regressors standardized to unit
variance before penalization (coefficients are returned on the original
scale), an unpenalized intercept, and lambda chosen per equation by
10-fold cross validation on contiguous time blocks.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np
import scipy.linalg

from . import _descent
from .errors import ConvergenceError, DataError, EstimationError
from .returns import ReturnPanel

logger = logging.getLogger(__name__)

DEFAULT_FOLDS = 10
DEFAULT_N_LAMBDAS = 50
DEFAULT_LAMBDA_MIN_RATIO = 1e-4
DEFAULT_TOL = 1e-7
DEFAULT_MAX_SWEEPS = 100_000

_WEIGHT_CAP = 1e8
_OLS_RIDGE_SCALE = 1e-6


@dataclass(frozen=True)
class PenaltyPath:
    """Per-equation penalty grid, its cross-validation curve, and the pick."""

    lambdas: np.ndarray  # descending grid
    chosen: float
    cv_error: np.ndarray

    def __post_init__(self):
        lambdas = np.asarray(self.lambdas, dtype=float)
        cv_error = np.asarray(self.cv_error, dtype=float)
        object.__setattr__(self, "lambdas", lambdas)
        object.__setattr__(self, "cv_error", cv_error)
        if lambdas.size > 1 and np.any(np.diff(lambdas) >= 0.0):
            raise EstimationError("penalty grid must be strictly descending")
        if not np.any(lambdas == self.chosen):
            raise EstimationError("chosen lambda must be a grid member")


@dataclass(frozen=True)
class VarModel:
    """Fitted lag-P system: coefficients, residuals and shock covariance."""

    lag_order: int
    phi: np.ndarray  # (P, N, N); phi[p - 1][i, j] multiplies series j at lag p
    intercept: np.ndarray  # (N,)
    residuals: np.ndarray  # (T - P, N)
    sigma: np.ndarray  # (N, N), symmetric PSD
    labels: tuple[str, ...]
    penalties: tuple[PenaltyPath, ...] = ()

    def __post_init__(self):
        sigma = np.asarray(self.sigma, dtype=float)
        object.__setattr__(self, "phi", np.asarray(self.phi, dtype=float))
        object.__setattr__(self, "intercept", np.asarray(self.intercept, dtype=float))
        object.__setattr__(self, "residuals", np.asarray(self.residuals, dtype=float))
        object.__setattr__(self, "sigma", sigma)
        if not np.array_equal(sigma, sigma.T):
            raise EstimationError("sigma must be stored exactly symmetric")
        min_eig = float(np.linalg.eigvalsh(sigma).min())
        if min_eig < -1e-10:
            raise EstimationError(f"sigma has eigenvalue {min_eig:.3e} below the PSD floor")

    @property
    def n_series(self) -> int:
        return self.sigma.shape[0]


def ols_fit(y: np.ndarray, x: np.ndarray) -> np.ndarray:
    """Least squares coefficients, with a ridge fallback when X'X is singular.

    The fallback adds 1e-6 * trace(X'X) / K to the normal-equation diagonal;
    it exists so that weight-generating fits always return finite values.
    """
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    gram = x.T @ x
    rhs = x.T @ y
    try:
        low = np.linalg.cholesky(gram)
        return scipy.linalg.cho_solve((low, True), rhs)
    except np.linalg.LinAlgError:
        pass
    k_dim = gram.shape[0]
    ridge = _OLS_RIDGE_SCALE * np.trace(gram) / k_dim
    if ridge <= 0.0:
        return np.zeros(k_dim)
    logger.debug("ols_fit: singular normal equations, ridge fallback %.3e", ridge)
    return np.linalg.solve(gram + ridge * np.eye(k_dim), rhs)


def _standardize(x: np.ndarray):
    """Center columns and scale to unit (population) variance.

    Zero-variance columns keep scale one; their centered values are all
    zero, so they cannot enter the fit.
    """
    mean = x.mean(axis=0)
    centered = x - mean
    scale = np.sqrt((centered**2).mean(axis=0))
    scale = np.where(scale > 0.0, scale, 1.0)
    return centered / scale, mean, scale


def _run_cd(gram, corr, yty, weights, lam, tol, max_sweeps):
    beta = np.zeros(corr.shape[0])
    sweeps, gap, _, status = _descent.enet_cd(
        gram, corr, yty, weights, lam, beta, tol, max_sweeps
    )
    if status == _descent.STATUS_MAX_SWEEPS:
        raise ConvergenceError(
            f"coordinate descent did not converge in {sweeps} sweeps (last change {gap:.3e})",
            last_coefficients=beta,
            gap=gap,
        )
    if status == _descent.STATUS_OBJECTIVE_ROSE:
        raise EstimationError("coordinate descent objective increased between sweeps")
    return beta


def adaptive_elastic_net_fit(
    y: np.ndarray,
    x: np.ndarray,
    weights: np.ndarray,
    lam: float,
    *,
    tol: float = DEFAULT_TOL,
    max_sweeps: int = DEFAULT_MAX_SWEEPS,
) -> np.ndarray:
    """Penalized coefficients on the original regressor scale.

    Regressors are standardized internally and the penalty (with the given
    weights) applies to the standardized coefficients; an unpenalized
    intercept is profiled out by centering. Weights must be finite and
    positive, `lam` non-negative.
    """
    y = np.asarray(y, dtype=float)
    x = np.asarray(x, dtype=float)
    weights = np.asarray(weights, dtype=float)
    if weights.shape != (x.shape[1],):
        raise DataError(f"weights shape {weights.shape} does not match {x.shape[1]} regressors")
    if not np.all(np.isfinite(weights)) or np.any(weights <= 0.0):
        raise DataError("penalty weights must be finite and strictly positive")
    if not lam >= 0.0:
        raise DataError("lambda must be non-negative")

    x_std, _, scale = _standardize(x)
    y_center = y - y.mean()
    gram = x_std.T @ x_std
    corr = x_std.T @ y_center
    yty = float(y_center @ y_center)
    beta_std = _run_cd(gram, corr, yty, weights, float(lam), tol, max_sweeps)
    return beta_std / scale


def penalty_weights(y: np.ndarray, x_std: np.ndarray) -> np.ndarray:
    """Inverse-magnitude weights from an OLS fit on the standardized design.

    Capped at 1e8 so near-zero OLS coefficients do not produce infinite
    penalties.
    """
    beta = ols_fit(y - y.mean(), x_std)
    return np.minimum(1.0 / np.maximum(np.abs(beta), 1.0 / _WEIGHT_CAP), _WEIGHT_CAP)


def lambda_grid(
    corr: np.ndarray,
    weights: np.ndarray,
    n_lambdas: int = DEFAULT_N_LAMBDAS,
    min_ratio: float = DEFAULT_LAMBDA_MIN_RATIO,
) -> np.ndarray:
    """Descending log-spaced grid from the smallest all-zeroing penalty.

    The all-zero vector is stationary iff |corr_j| <= lam * w_j / 4 for all
    j, so lam_max = max_j 4 |corr_j| / w_j.
    """
    lam_max = float(np.max(4.0 * np.abs(corr) / weights, initial=0.0))
    if not np.isfinite(lam_max) or lam_max <= 0.0:
        return np.array([0.0])
    return np.geomspace(lam_max, lam_max * min_ratio, n_lambdas)


def _fold_edges(n_rows: int, folds: int) -> list[tuple[int, int]]:
    edges = np.linspace(0, n_rows, folds + 1).round().astype(int)
    return [(int(a), int(b)) for a, b in zip(edges[:-1], edges[1:])]


class _FoldDesign:
    """Standardized training design of one CV fold; shared across equations."""

    def __init__(self, x, lo, hi):
        keep = np.ones(x.shape[0], dtype=bool)
        keep[lo:hi] = False
        self.keep = keep
        self.test = slice(lo, hi)
        self.x_std, self.mean, self.scale = _standardize(x[keep])
        self.gram = self.x_std.T @ self.x_std
        self.x_test_std = (x[lo:hi] - self.mean) / self.scale


def _cv_curve(designs, y, n_rows, weights, lambdas, tol, max_sweeps):
    """Pooled out-of-fold squared prediction error for every grid point."""
    total_sq = np.zeros(lambdas.size)
    for design in designs:
        y_train = y[design.keep]
        y_bar = y_train.mean()
        y_center = y_train - y_bar
        corr = design.x_std.T @ y_center
        betas, n_done, status = _descent.enet_path(
            design.gram, corr, float(y_center @ y_center), weights, lambdas, tol, max_sweeps
        )
        if status != _descent.STATUS_OK:
            raise ConvergenceError(
                f"coordinate descent failed at grid index {n_done} during cross validation",
                last_coefficients=betas[n_done],
                gap=float("nan"),
            )
        preds = y_bar + design.x_test_std @ betas.T
        total_sq += ((preds - y[design.test][:, None]) ** 2).sum(axis=0)
    return total_sq / n_rows


def cross_validate_lambda(
    y: np.ndarray,
    x: np.ndarray,
    weights: np.ndarray,
    folds: int = DEFAULT_FOLDS,
    *,
    lambdas: np.ndarray | None = None,
    tol: float = DEFAULT_TOL,
    max_sweeps: int = DEFAULT_MAX_SWEEPS,
) -> float:
    """Grid member minimizing mean out-of-fold squared prediction error.

    Folds are contiguous time blocks taken in order (no shuffling), so the
    selection is deterministic; ties resolve to the largest lambda.
    """
    y = np.asarray(y, dtype=float)
    x = np.asarray(x, dtype=float)
    n_rows = x.shape[0]
    if n_rows < folds:
        raise DataError(f"{n_rows} rows is fewer than {folds} cross-validation folds")
    designs = [_FoldDesign(x, lo, hi) for lo, hi in _fold_edges(n_rows, folds)]
    chosen, _, _ = _cv_select(y, x, weights, designs, lambdas, tol, max_sweeps)
    return chosen


def _cv_select(y, x, weights, designs, lambdas, tol, max_sweeps):
    if lambdas is None:
        x_std, _, _ = _standardize(x)
        corr = x_std.T @ (y - y.mean())
        lambdas = lambda_grid(corr, weights)
    lambdas = np.asarray(lambdas, dtype=float)
    errors = _cv_curve(designs, y, x.shape[0], weights, lambdas, tol, max_sweeps)
    best = 0
    for i in range(1, lambdas.size):
        if errors[i] < errors[best]:
            best = i
    return float(lambdas[best]), lambdas, errors


class _SystemDesign:
    """Shared lagged design pieces reused by every equation of the system."""

    def __init__(self, lagged, folds):
        n_rows = lagged.shape[0]
        if n_rows < folds:
            raise DataError(f"{n_rows} usable rows is fewer than {folds} cross-validation folds")
        self.x = lagged
        self.x_std, self.x_mean, self.scale = _standardize(lagged)
        self.gram = self.x_std.T @ self.x_std
        self.designs = [_FoldDesign(lagged, lo, hi) for lo, hi in _fold_edges(n_rows, folds)]


def _fit_equation(y, system, n_lambdas, min_ratio, tol, max_sweeps):
    y_bar = y.mean()
    y_center = y - y_bar
    weights = penalty_weights(y, system.x_std)
    corr = system.x_std.T @ y_center
    grid = lambda_grid(corr, weights, n_lambdas, min_ratio)
    chosen, grid, errors = _cv_select(y, system.x, weights, system.designs, grid, tol, max_sweeps)

    beta_std = _run_cd(
        system.gram, corr, float(y_center @ y_center), weights, chosen, tol, max_sweeps
    )
    beta = beta_std / system.scale
    intercept = y_bar - float(beta @ system.x_mean)
    return beta, intercept, PenaltyPath(lambdas=grid, chosen=chosen, cv_error=errors)


def build_lag_matrix(values: np.ndarray, lag_order: int) -> tuple[np.ndarray, np.ndarray]:
    """Stack the panel into (targets, lagged regressors) for a lag-P system.

    Regressor columns are grouped lag-major: the first N columns are lag 1,
    the next N are lag 2, and so on.
    """
    t, n = values.shape
    if t <= lag_order:
        raise DataError(f"panel has {t} rows; need more than lag order {lag_order}")
    targets = values[lag_order:]
    blocks = [values[lag_order - p : t - p] for p in range(1, lag_order + 1)]
    return targets, np.hstack(blocks)


def fit_var(
    panel: ReturnPanel,
    lag_order: int,
    *,
    folds: int = DEFAULT_FOLDS,
    n_lambdas: int = DEFAULT_N_LAMBDAS,
    lambda_min_ratio: float = DEFAULT_LAMBDA_MIN_RATIO,
    tol: float = DEFAULT_TOL,
    max_sweeps: int = DEFAULT_MAX_SWEEPS,
) -> VarModel:
    """Fit the lag-P system equation by equation.

    Residuals are stacked over the T - P usable rows and demeaned before
    forming sigma = U'U / (T - P).
    """
    if lag_order < 1:
        raise DataError("lag order must be at least 1")
    values = panel.values
    t, n = values.shape
    if t <= lag_order * n / 2:
        logger.warning(
            "short sample: %d rows for a %d-variable lag-%d system", t, n, lag_order
        )
    targets, lagged = build_lag_matrix(values, lag_order)
    system = _SystemDesign(lagged, folds)

    coeffs = np.empty((n, lagged.shape[1]))
    intercepts = np.empty(n)
    paths = []
    for i in range(n):
        try:
            beta, alpha, path = _fit_equation(
                targets[:, i], system, n_lambdas, lambda_min_ratio, tol, max_sweeps
            )
        except (DataError, EstimationError) as exc:
            kind = DataError if isinstance(exc, DataError) else EstimationError
            raise kind(f"equation {i} ({panel.labels[i]}): {exc}") from exc
        coeffs[i] = beta
        intercepts[i] = alpha
        paths.append(path)

    residuals = targets - intercepts[None, :] - lagged @ coeffs.T
    demeaned = residuals - residuals.mean(axis=0)
    sigma = demeaned.T @ demeaned / demeaned.shape[0]
    sigma = 0.5 * (sigma + sigma.T)

    phi = np.empty((lag_order, n, n))
    for p in range(lag_order):
        phi[p] = coeffs[:, p * n : (p + 1) * n]
    return VarModel(
        lag_order=lag_order,
        phi=phi,
        intercept=intercepts,
        residuals=residuals,
        sigma=sigma,
        labels=panel.labels,
        penalties=tuple(paths),
    )


def model_to_dict(model: VarModel) -> dict:
    """JSON-ready dictionary for the CLI's --dump-model flag."""
    return {
        "lag_order": model.lag_order,
        "labels": list(model.labels),
        "intercept": model.intercept.tolist(),
        "phi": model.phi.tolist(),
        "sigma": model.sigma.tolist(),
        "residuals": model.residuals.tolist(),
        "chosen_lambda": [p.chosen for p in model.penalties],
    }
