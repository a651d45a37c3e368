"""Data-generating processes and the Monte-Carlo harness.

Every replication draws from its own generator, seeded by
``SeedSequence(master_seed, spawn_key=(cell, replication))``, so results do
not depend on how replications are spread over workers.
"""

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, replace
from typing import Optional

import numpy as np
from scipy.signal import lfilter

from .br_baseline import select_lambda_br
from .clustering import PenaltyConfig, br_clust_fit, tune_over_lambda
from .errors import MidasError
from .fourier_midas import FourierBasis, fit_midas_ols, rolling_forecasts, select_basis
from .metrics import adjusted_rand, jaccard, per_lag_rmse, rand_index
from .panel_core import MidasSeries, PanelDataset, Partition

SHAPES = ("exp", "hump", "linear", "cyclical", "discrete")

_ALIASES = {
    "expdecline": "exp", "exp": "exp", "humpshaped": "hump", "hump": "hump",
    "lineardecline": "linear", "linear": "linear", "lin": "linear",
    "cyclical": "cyclical", "cyc": "cyclical", "discrete": "discrete", "disc": "discrete",
}


def shape_kind(name: str) -> str:
    try:
        return _ALIASES[name.lower().replace("_", "").replace("-", "")]
    except KeyError:
        raise ValueError(f"unknown weight shape {name!r}") from None


@dataclass(frozen=True)
class WeightShape:
    kind: str
    m: int
    theta1: Optional[float] = None
    theta2: Optional[float] = None

    def __post_init__(self):
        object.__setattr__(self, "kind", shape_kind(self.kind))
        if self.m < 1:
            raise ValueError("m must be positive")

    def params(self):
        m = self.m
        defaults = {
            "exp": (7e-4, -6e-3),
            "hump": (0.08, None),
            "linear": (1.0, 0.05),
            "cyclical": (100 / m, 0.01),
            "discrete": (None, None),
        }[self.kind]
        t1 = defaults[0] if self.theta1 is None else self.theta1
        t2 = defaults[1] if self.theta2 is None else self.theta2
        if self.kind == "hump" and t2 is None:
            t2 = 2 * t1 / m
        return t1, t2


def make_weights(shape: WeightShape) -> np.ndarray:
    m = shape.m
    j = np.arange(m, dtype=float)
    t1, t2 = shape.params()
    if shape.kind == "exp":
        e = np.exp(t1 * j + t2 * j**2)
        return e / e.sum()
    if shape.kind == "hump":
        e = np.exp(t1 * j - t2 * j**2)
        return e / e.sum()
    if shape.kind == "linear":
        # j - 1 with j starting at 0, as in the original parameterization
        return (t1 + t2 * (j - 1)) / (t1 * m + t2 * m * (m + 1) / 2)
    if shape.kind == "cyclical":
        return t1 / m * np.sin(t2 + 2 * np.pi * j / (m - 1))
    w = np.zeros(m)
    k = m // 5
    if k:
        w[m - k:] = 5 / m
    return w


@dataclass(frozen=True)
class DgpConfig:
    """Single-series DGP. ``noise_sd`` is the standard deviation of the response noise."""

    T: int = 100
    m: int = 20
    alpha0: float = 0.5
    alpha1: float = 0.2
    c: float = 0.5
    d: float = 0.9
    noise_sd: float = 0.125
    shape: str = "exp"
    burn_in: int = 100
    reset_chain: bool = False

    def __post_init__(self):
        if not abs(self.d) < 1:
            raise ValueError("AR coefficient must satisfy |d| < 1")
        if self.noise_sd < 0:
            raise ValueError("noise_sd must be non-negative")

    def weights(self) -> np.ndarray:
        return make_weights(WeightShape(self.shape, self.m))

    def beta_star(self) -> np.ndarray:
        return self.alpha1 * self.weights()


def ar_regressor(rng, T, m, c=0.5, d=0.9, burn_in=100, reset_chain=False) -> np.ndarray:
    """T x m high-frequency AR(1) draws started at the stationary mean.

    The chain runs through all T*m steps unless ``reset_chain`` restarts it
    (with a fresh burn-in) at every low-frequency period.
    """
    mu = c / (1 - d)
    if reset_chain:
        u = rng.standard_normal((T, burn_in + m))
        x = lfilter([1.0], [1.0, -d], c + u, axis=1, zi=np.full((T, 1), d * mu))[0]
        return x[:, burn_in:]
    u = rng.standard_normal(burn_in + T * m)
    x = lfilter([1.0], [1.0, -d], c + u, zi=[d * mu])[0]
    return x[burn_in:].reshape(T, m)


def generate_series(config: DgpConfig, rng):
    """Draw (y, X) with y_t = alpha0 + X_t beta* + eps_t."""
    rng = np.random.default_rng(rng)
    X = ar_regressor(rng, config.T, config.m, config.c, config.d, config.burn_in, config.reset_chain)
    eps = config.noise_sd * rng.standard_normal(config.T)
    y = config.alpha0 + X @ config.beta_star() + eps
    return y, X


def generate_two_cluster_panel(per_group: int = 15, T: int = 100, m: int = 20, alpha1: float = 0.4,
                               seed=None, basis: FourierBasis = FourierBasis(2, 3), noise_sd: float = 0.125,
                               shapes=("exp", "cyclical")):
    """Two groups of independent series (exp-decline and cyclical weights), no intercept.

    Returns (panel, true partition, list of true weight vectors).
    """
    if per_group < 1:
        raise ValueError("per_group must be positive")
    rng = np.random.default_rng(seed)
    subjects, labels, truth = [], [], []
    for g, shape in enumerate(shapes):
        cfg = DgpConfig(T=T, m=m, alpha0=0.0, alpha1=alpha1, noise_sd=noise_sd, shape=shape)
        for k in range(per_group):
            y, X = generate_series(cfg, rng)
            subjects.append(MidasSeries(f"{shape}_{k}", y, None, X))
            labels.append(g)
            truth.append(cfg.beta_star())
    panel = PanelDataset(subjects, basis)
    return panel, Partition(tuple(labels), tuple(panel.ids)), truth


# Monte-Carlo harness


@dataclass(frozen=True)
class Cell:
    """One grid cell of a study. Unused fields are ignored by the study."""

    shape: str = "exp"
    T: int = 100
    m: int = 20
    alpha1: float = 0.2
    method: str = "fourier"
    L: int = 2
    K: int = 3
    criterion: str = "BIC"
    count: str = "standard"
    theta: float = 2.5
    lambda1: Optional[float] = None
    per_group: int = 15

    def label(self) -> dict:
        return {k: v for k, v in asdict(self).items()}


ESTIMATION_METHODS = ("fourier", "fourier_ic", "br")
FORECASTING_METHODS = ("fourier", "br")
CLUSTERING_METHODS = ("f_clust", "br_clust", "f_noclust")

DEFAULT_LAMBDA_GRID = tuple(np.arange(1.0, 4.51, 0.5))
BR_TABLE_GRID = np.linspace(1.0, 100.0, 100)


def replication_rng(master_seed: int, cell_index: int, rep: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence(master_seed, spawn_key=(cell_index, rep)))


def _estimation_rep(cell: Cell, rng):
    cfg = DgpConfig(T=cell.T, m=cell.m, alpha1=cell.alpha1, shape=cell.shape)
    y, X = generate_series(cfg, rng)
    truth = cfg.beta_star()
    ones = np.ones(cell.T)
    if cell.method == "fourier":
        fit = fit_midas_ols(y, ones, X, FourierBasis(cell.L, cell.K))
        est, extra = fit.beta_star, {}
    elif cell.method == "fourier_ic":
        basis, fit = select_basis(y, ones, X, cell.L, cell.K, cell.criterion, cell.count)
        est, extra = fit.beta_star, {"L": basis.L, "K": basis.K}
    elif cell.method == "br":
        lam, fit = select_lambda_br(y, X, BR_TABLE_GRID, intercept=False)
        est, extra = fit.beta_star, {"lambda": lam}
    else:
        raise ValueError(f"unknown estimation method {cell.method!r}")
    return {"rmse": 100 * per_lag_rmse(est, truth), **extra}


def _br_forecasts(y, X):
    T = y.size - (y.size % 2)
    half = T // 2
    preds = np.empty(half)
    for k in range(half):
        rows = slice(k, half + k)
        _, fit = select_lambda_br(y[rows], X[rows], BR_TABLE_GRID, intercept=False)
        preds[k] = X[half + k] @ fit.beta_star
    return preds, y[half:T]


def _forecasting_rep(cell: Cell, rng):
    cfg = DgpConfig(T=cell.T, m=cell.m, alpha1=cell.alpha1, shape=cell.shape)
    y, X = generate_series(cfg, rng)
    if cell.method == "fourier":
        preds, actual = rolling_forecasts(y, np.ones(cell.T), X, FourierBasis(cell.L, cell.K))
    elif cell.method == "br":
        preds, actual = _br_forecasts(y, X)
    else:
        raise ValueError(f"unknown forecasting method {cell.method!r}")
    return {"rmsfe": float(np.sqrt(np.mean((preds - actual) ** 2)))}


def _clustering_rep(cell: Cell, rng):
    panel, truth, weights = generate_two_cluster_panel(cell.per_group, cell.T, cell.m, cell.alpha1, rng,
                                                        FourierBasis(cell.L, cell.K))
    base = PenaltyConfig(theta=cell.theta)
    grid = DEFAULT_LAMBDA_GRID if cell.lambda1 is None else (cell.lambda1,)
    M = FourierBasis(cell.L, cell.K).matrix(cell.m)
    out = {}
    if cell.method == "f_noclust":
        gammas = np.vstack([fit_midas_ols(s.y, None, s.X, panel.basis).beta for s in panel.subjects])
        est = gammas @ M
        part = Partition(tuple(range(panel.n)))
    elif cell.method == "f_clust":
        lam, sol, _ = tune_over_lambda(panel, cell.theta, grid, base)
        est = sol.coefficients @ M
        part = sol.partition
        out.update(lambda1_hat=lam, converged=float(sol.converged), iterations=sol.iterations)
    elif cell.method == "br_clust":
        best = None
        for lam in grid:
            sol = br_clust_fit(panel, replace(base, lambda1=float(lam)))
            if best is None or sol.bic < best[1].bic:
                best = (float(lam), sol)
        lam, sol = best
        est = sol.coefficients
        part = sol.partition
        out.update(lambda1_hat=lam, converged=float(sol.converged), iterations=sol.iterations)
    else:
        raise ValueError(f"unknown clustering method {cell.method!r}")
    out.update(
        rmse=100 * per_lag_rmse(est, np.vstack(weights)),
        rand=rand_index(truth, part),
        ari=adjusted_rand(truth, part),
        jaccard=jaccard(truth, part),
        G=float(part.G),
    )
    return out


STUDIES = {
    "estimation": _estimation_rep,
    "forecasting": _forecasting_rep,
    "clustering": _clustering_rep,
}


def _run_one(args):
    study, cell, cell_index, rep, master_seed = args
    rng = replication_rng(master_seed, cell_index, rep)
    try:
        return STUDIES[study](cell, rng)
    except (MidasError, np.linalg.LinAlgError, FloatingPointError) as exc:
        return {"error": f"{type(exc).__name__}: {exc}"}


@dataclass
class CellResult:
    cell: Cell
    replications: int
    failures: int
    summary: dict
    draws: dict = field(default_factory=dict, repr=False)
    errors: list = field(default_factory=list, repr=False)


# metrics summarized by the median; the rest by the mean
MEDIAN_METRICS = {"rmse", "rmsfe"}


def _summarize(results):
    ok = [r for r in results if "error" not in r]
    keys = sorted({k for r in ok for k in r})
    draws = {k: np.array([r[k] for r in ok if k in r], dtype=float) for k in keys}
    summary = {}
    for k, v in draws.items():
        summary[k] = float(np.median(v)) if k in MEDIAN_METRICS else float(np.mean(v))
    return summary, draws, [r["error"] for r in results if "error" in r]


def run_mc(study: str, cells, replications: int, seed: int = 0, jobs: int = 1):
    """Run ``replications`` draws per cell; returns one CellResult per cell, in order."""
    if study not in STUDIES:
        raise ValueError(f"unknown study {study!r}; choose from {sorted(STUDIES)}")
    if replications < 1:
        raise ValueError("replications must be at least 1")
    cells = list(cells)
    tasks = [(study, c, ci, r, seed) for ci, c in enumerate(cells) for r in range(replications)]
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            results = list(pool.map(_run_one, tasks, chunksize=max(1, math.ceil(len(tasks) / (4 * jobs)))))
    else:
        results = [_run_one(t) for t in tasks]
    out = []
    for ci, cell in enumerate(cells):
        chunk = results[ci * replications:(ci + 1) * replications]
        summary, draws, errors = _summarize(chunk)
        out.append(CellResult(cell, replications, len(errors), summary, draws, errors))
    return out
