"""Linearized MIDAS regression with a Fourier flexible form basis.

A high-frequency block x_t (length m_t) enters the regression through the
r-vector M(m_t) x_t, where M stacks the polynomial rows (j/m)^l, l=0..L,
followed by sin/cos pairs at frequencies k=1..K. Everything downstream is
ordinary least squares on W = [Z | X M'].
"""

from dataclasses import dataclass, field
from functools import lru_cache
from typing import Sequence, Union

import numpy as np
from scipy.linalg import solve_triangular

from .errors import DegenerateSample, DimensionMismatch, EmptyRow, RankDeficient

RANK_RTOL = 1e-10

HighFreq = Union[np.ndarray, Sequence[np.ndarray]]


@dataclass(frozen=True)
class FourierBasis:
    L: int = 2
    K: int = 3

    def __post_init__(self):
        if self.L < 0 or self.K < 0:
            raise ValueError("L and K must be non-negative")

    @property
    def r(self) -> int:
        return self.L + 1 + 2 * self.K

    def matrix(self, m: int) -> np.ndarray:
        return build_transform_matrix(m, self)


@lru_cache(maxsize=256)
def _transform_cached(m: int, L: int, K: int) -> np.ndarray:
    j = np.arange(m) / m
    rows = [j**l for l in range(L + 1)]
    for k in range(1, K + 1):
        rows.append(np.sin(2 * np.pi * k * j))
        rows.append(np.cos(2 * np.pi * k * j))
    M = np.vstack(rows)
    M.flags.writeable = False
    return M


def build_transform_matrix(m: int, basis: FourierBasis) -> np.ndarray:
    """The r x m transform matrix M for frequency ratio m."""
    if m < 1:
        raise EmptyRow(f"frequency ratio must be >= 1, got {m}")
    return _transform_cached(int(m), basis.L, basis.K).copy()


def _is_block(X) -> bool:
    return isinstance(X, np.ndarray) and X.ndim == 2


def period_lengths(X: HighFreq) -> np.ndarray:
    if _is_block(X):
        return np.full(X.shape[0], X.shape[1], dtype=int)
    return np.array([len(np.atleast_1d(x)) for x in X], dtype=int)


def transform_regressors(X: HighFreq, basis: FourierBasis) -> np.ndarray:
    """Map high-frequency rows to the T x r matrix of transformed regressors.

    ``X`` is either a T x m array or a sequence of 1-d arrays whose lengths
    may differ from period to period.
    """
    if _is_block(X):
        if X.shape[1] == 0:
            raise EmptyRow("high-frequency rows are empty")
        return X @ _transform_cached(X.shape[1], basis.L, basis.K).T
    out = np.empty((len(X), basis.r))
    for t, x in enumerate(X):
        x = np.asarray(x, dtype=float).ravel()
        if x.size == 0:
            raise EmptyRow(f"high-frequency row {t} is empty")
        out[t] = _transform_cached(x.size, basis.L, basis.K) @ x
    return out


def _as_z(Z, T: int) -> np.ndarray:
    if Z is None:
        return np.empty((T, 0))
    Z = np.asarray(Z, dtype=float)
    if Z.ndim == 1:
        Z = Z[:, None]
    if Z.shape[0] != T:
        raise DimensionMismatch(f"Z has {Z.shape[0]} rows, expected {T}")
    return Z


def solve_least_squares(W: np.ndarray, y: np.ndarray) -> np.ndarray:
    """Least squares through a thin QR, after an SVD rank check."""
    if W.shape[1] == 0:
        return np.empty(0)
    s = np.linalg.svd(W, compute_uv=False)
    if s[-1] < RANK_RTOL * s[0] or W.shape[0] < W.shape[1]:
        cond = np.inf if s[-1] == 0 else s[0] / s[-1]
        raise RankDeficient(f"design is rank deficient (condition number {cond:.3g})", cond)
    Q, R = np.linalg.qr(W)
    return solve_triangular(R, Q.T @ y)


@dataclass
class MidasFit:
    alpha: np.ndarray
    beta: np.ndarray
    beta_star: Union[np.ndarray, tuple]
    residuals: np.ndarray
    sigma2: float
    basis: FourierBasis
    period_m: np.ndarray = field(repr=False, default=None)

    @property
    def rss(self) -> float:
        return float(self.residuals @ self.residuals)

    @property
    def T(self) -> int:
        return self.residuals.size

    @property
    def gamma(self) -> np.ndarray:
        return np.concatenate([self.alpha, self.beta])

    def weights(self, m: int) -> np.ndarray:
        """Recovered high-frequency weights M(m)' beta for ratio m."""
        return _transform_cached(int(m), self.basis.L, self.basis.K).T @ self.beta


def fit_midas_ols(y, Z, X: HighFreq, basis: FourierBasis) -> MidasFit:
    y = np.asarray(y, dtype=float).ravel()
    T = y.size
    ms = period_lengths(X)
    if ms.size != T:
        raise DimensionMismatch(f"{ms.size} high-frequency rows for {T} observations")
    Zm = _as_z(Z, T)
    W = np.hstack([Zm, transform_regressors(X, basis)])
    if T <= W.shape[1]:
        raise RankDeficient(f"T={T} does not exceed the {W.shape[1]} regressors")
    gamma = solve_least_squares(W, y)
    resid = y - W @ gamma
    q = Zm.shape[1]
    alpha, beta = gamma[:q], gamma[q:]
    if np.all(ms == ms[0]):
        beta_star = _transform_cached(int(ms[0]), basis.L, basis.K).T @ beta
    else:
        beta_star = tuple(_transform_cached(int(m), basis.L, basis.K).T @ beta for m in ms)
    sigma2 = float(resid @ resid) / (T - W.shape[1])
    return MidasFit(alpha, beta, beta_star, resid, sigma2, basis, ms)


def info_criterion(rss: float, T: int, L: int, K: int, kind: str = "BIC", n_params=None) -> float:
    """AIC, AICc or BIC of a fit with basis (L, K).

    The parameter count defaults to K + L + 3; ``n_params`` overrides it
    (the AICc denominator becomes T - n_params - 1).
    """
    k = K + L + 3 if n_params is None else n_params
    kind = kind.upper()
    if kind == "AIC":
        return float(np.log(rss) + 2 * k / T)
    if kind == "AICC":
        denom = T - k - 1
        if denom <= 0:
            raise DegenerateSample(f"AICc needs T > {k + 1} (T={T}, L={L}, K={K})")
        return float(np.log(rss) + 2 * k / denom)
    if kind == "BIC":
        return float(np.log(rss) + np.log(T) * k / T)
    raise ValueError(f"unknown criterion {kind!r}")


PENALTY_COUNTS = ("standard", "coefficients")


def _n_params(count, q, L, K):
    if count == "standard":
        return None
    if count == "coefficients":
        return q + L + 1 + 2 * K
    raise ValueError(f"penalty count must be one of {PENALTY_COUNTS}")


def basis_scores(y, Z, X: HighFreq, Lmax: int, Kmax: int, kind: str = "BIC", count: str = "standard"):
    """Criterion value for each (L, K) on the grid; failures map to the exception.

    ``count="coefficients"`` charges every fitted coefficient (q + L + 1 + 2K)
    instead of K + L + 3.
    """
    scores = {}
    for L in range(Lmax + 1):
        for K in range(Kmax + 1):
            basis = FourierBasis(L, K)
            try:
                fit = fit_midas_ols(y, Z, X, basis)
                k = _n_params(count, fit.alpha.size, L, K)
                scores[(L, K)] = (info_criterion(fit.rss, fit.T, L, K, kind, k), fit)
            except (RankDeficient, DegenerateSample) as exc:
                scores[(L, K)] = (exc, None)
    return scores


def select_basis(y, Z, X: HighFreq, Lmax: int, Kmax: int, kind: str = "BIC", count: str = "standard"):
    """Pick (L, K) minimizing the criterion; ties go to smaller L+2K, then smaller K."""
    scores = basis_scores(y, Z, X, Lmax, Kmax, kind, count)
    ok = [(v, L + 2 * K, K, L) for (L, K), (v, fit) in scores.items() if fit is not None]
    if not ok:
        first = next(iter(scores.values()))[0]
        raise RankDeficient(f"no grid point could be fitted: {first}")
    _, _, K, L = min(ok)
    return FourierBasis(L, K), scores[(L, K)][1]


def forecast_one_step(fit: MidasFit, z_next, x_next) -> float:
    z = np.atleast_1d(np.asarray(z_next if z_next is not None else [], dtype=float)).ravel()
    x = np.atleast_1d(np.asarray(x_next, dtype=float)).ravel()
    if z.size != fit.alpha.size:
        raise DimensionMismatch(f"expected {fit.alpha.size} low-frequency covariates, got {z.size}")
    if x.size == 0:
        raise EmptyRow("high-frequency vector is empty")
    xt = _transform_cached(x.size, fit.basis.L, fit.basis.K) @ x
    return float(z @ fit.alpha + xt @ fit.beta)


def _row(X, t):
    return X[t] if _is_block(X) else np.asarray(X[t], dtype=float)


def _subset(X, rows):
    if _is_block(X):
        return X[rows]
    return [X[t] for t in range(rows.start, rows.stop)]


def rolling_forecasts(y, Z, X: HighFreq, basis: FourierBasis):
    """Half-sample rolling one-step forecasts; returns (forecasts, actuals).

    Odd T drops the final observation.
    """
    y = np.asarray(y, dtype=float).ravel()
    T = y.size - (y.size % 2)
    Zm = _as_z(Z, y.size)
    half = T // 2
    preds = np.empty(half)
    for k in range(half):
        rows = slice(k, half + k)
        fit = fit_midas_ols(y[rows], Zm[rows], _subset(X, rows), basis)
        preds[k] = forecast_one_step(fit, Zm[half + k], _row(X, half + k))
    return preds, y[half:T]


def rolling_rmsfe(y, Z, X: HighFreq, basis: FourierBasis) -> float:
    preds, actual = rolling_forecasts(y, Z, X, basis)
    T = 2 * actual.size
    return float(np.sqrt(2.0 / T * np.sum((preds - actual) ** 2)))
