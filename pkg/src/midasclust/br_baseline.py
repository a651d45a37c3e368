"""Smoothed least-squares MIDAS baseline with a second-difference roughness penalty.

Unrestricted weights on all m lags, shrunk toward a straight line by
lambda * ||D beta||^2. The smoothing level is tuned with a modified AIC.
"""

from dataclasses import dataclass

import numpy as np
from scipy.linalg import LinAlgError, cho_factor, cho_solve

from .errors import DegenerateSample, RankDeficient, TooFewColumns

# Cholesky pivots of a numerically singular Gram matrix sit near sqrt(eps) relative
# to the largest; flag ratios below this as singular
GRAM_PIVOT_RTOL = 1e-7


def second_difference_matrix(m: int) -> np.ndarray:
    if m < 3:
        raise TooFewColumns(f"second differences need m >= 3, got {m}")
    D = np.zeros((m - 2, m))
    i = np.arange(m - 2)
    D[i, i] = 1.0
    D[i, i + 1] = -2.0
    D[i, i + 2] = 1.0
    return D


def default_lambda_grid() -> np.ndarray:
    return np.logspace(-2, 2, 100)


@dataclass
class SlsFit:
    beta_star: np.ndarray
    lambda_br: float
    residuals: np.ndarray
    effective_df: float
    intercept: float = 0.0

    @property
    def rss(self) -> float:
        return float(self.residuals @ self.residuals)


def _design(X, intercept):
    X = np.asarray(X, dtype=float)
    m = X.shape[1]
    P = np.zeros((m + intercept, m + intercept))
    D = second_difference_matrix(m)
    P[intercept:, intercept:] = D.T @ D
    A = np.hstack([np.ones((X.shape[0], 1)), X]) if intercept else X
    return A, P


def _solve(A, P, y, lam):
    G = A.T @ A
    try:
        c = cho_factor(G + lam * P)
    except LinAlgError as exc:
        raise RankDeficient(f"penalized Gram matrix is singular at lambda={lam}", np.inf) from exc
    d = np.abs(np.diag(c[0]))
    if d.min() <= GRAM_PIVOT_RTOL * d.max():
        cond = np.inf if d.min() == 0 else (d.max() / d.min()) ** 2
        raise RankDeficient(f"penalized Gram matrix is singular at lambda={lam} (condition number {cond:.3g})", cond)
    coef = cho_solve(c, A.T @ y)
    df = float(np.trace(cho_solve(c, G)))
    return coef, df


def fit_br_sls(y, X, lambda_br: float, intercept: bool = True) -> SlsFit:
    """Penalized least squares; the intercept column, if any, is not penalized."""
    if lambda_br < 0:
        raise ValueError("lambda_br must be non-negative")
    y = np.asarray(y, dtype=float).ravel()
    A, P = _design(X, int(intercept))
    coef, df = _solve(A, P, y, lambda_br)
    a0 = float(coef[0]) if intercept else 0.0
    return SlsFit(coef[int(intercept):], float(lambda_br), y - A @ coef, df, a0)


def _modified_aic(rss, s, T):
    if T - s + 2 <= 0:
        raise DegenerateSample(f"T - s + 2 <= 0 (T={T}, s={s:.3f})")
    return float(np.log(rss) + 2 * (s + 1) / (T - s + 2))


def br_modified_aic(y, X, lambda_br: float, intercept: bool = True) -> float:
    fit = fit_br_sls(y, X, lambda_br, intercept)
    return _modified_aic(fit.rss, fit.effective_df, fit.residuals.size)


def select_lambda_br(y, X, grid=None, intercept: bool = True):
    """Grid minimizer of the modified AIC; ties resolve to the larger lambda."""
    grid = default_lambda_grid() if grid is None else np.asarray(grid, dtype=float).ravel()
    if grid.size == 0:
        raise ValueError("lambda grid is empty")
    if np.any(grid < 0):
        raise ValueError("lambda grid must be non-negative")
    y = np.asarray(y, dtype=float).ravel()
    A, P = _design(X, int(intercept))
    best = None
    for lam in grid:
        coef, df = _solve(A, P, y, lam)
        resid = y - A @ coef
        score = _modified_aic(resid @ resid, df, y.size)
        if best is None or score < best[0] or (score == best[0] and lam > best[1]):
            best = (score, lam)
    lam = float(best[1])
    return lam, fit_br_sls(y, X, lam, intercept)
