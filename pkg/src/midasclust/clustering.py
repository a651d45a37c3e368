"""Fused-penalty clustering of panel MIDAS coefficients by ADMM.

Every pair of subjects i < j carries a concave (MCP or SCAD) penalty on
eta_ij = C (gamma_i - gamma_j), where C selects the clustered coordinates
(identity by default). Subjects whose fused difference is exactly zero end
up in the same group.
"""

from dataclasses import dataclass, field, replace
from typing import NamedTuple, Optional

import numpy as np
import scipy.sparse as sp
from scipy.linalg import LinAlgError, cho_factor, cho_solve
from scipy.sparse.csgraph import connected_components

from .br_baseline import second_difference_matrix
from .errors import InvalidConfig, RankDeficient, SingularGammaUpdate
from .fourier_midas import RANK_RTOL
from .panel_core import PanelDataset, Partition, cluster_bic

PAIRINGS = ("dimensional", "as_written")


@dataclass(frozen=True)
class PenaltyConfig:
    """Penalty and solver controls.

    ``tolerance_pairing`` decides which tolerance each residual is held to:
    "dimensional" compares the pairwise (primal) residual with the tolerance
    built from pair-space quantities and the subject-space (dual) residual
    with the one built from D'xi; "as_written" swaps them.
    """

    kind: str = "mcp"
    theta: float = 2.5
    lambda1: float = 1.0
    lambda2: float = 1.0
    max_iter: int = 3000
    eps_abs: float = 1e-4
    eps_rel: float = 1e-3
    fuse_tol: float = 1e-10
    tolerance_pairing: str = "dimensional"

    def __post_init__(self):
        kind = self.kind.lower()
        object.__setattr__(self, "kind", kind)
        if kind not in ("mcp", "scad"):
            raise InvalidConfig(f"unknown penalty {self.kind!r}")
        if not self.lambda2 > 0:
            raise InvalidConfig("lambda2 must be positive")
        if self.lambda1 < 0:
            raise InvalidConfig("lambda1 must be non-negative")
        if kind == "mcp" and not self.theta * self.lambda2 > 1:
            raise InvalidConfig(f"MCP needs theta * lambda2 > 1 (theta={self.theta}, lambda2={self.lambda2})")
        if kind == "scad" and not self.theta > 1 + 1 / self.lambda2:
            raise InvalidConfig(f"SCAD needs theta > 1 + 1/lambda2 (theta={self.theta}, lambda2={self.lambda2})")
        if self.max_iter < 1:
            raise InvalidConfig("max_iter must be at least 1")
        if self.tolerance_pairing not in PAIRINGS:
            raise InvalidConfig(f"tolerance_pairing must be one of {PAIRINGS}")


# penalties and their proximal maps


def mcp_penalty(t, lambda1, theta):
    t = np.abs(np.asarray(t, dtype=float))
    return np.where(t <= theta * lambda1, lambda1 * t - t**2 / (2 * theta), theta * lambda1**2 / 2)


def scad_penalty(t, lambda1, theta):
    t = np.abs(np.asarray(t, dtype=float))
    mid = (2 * theta * lambda1 * t - t**2 - lambda1**2) / (2 * (theta - 1))
    return np.where(t <= lambda1, lambda1 * t, np.where(t <= theta * lambda1, mid, lambda1**2 * (theta + 1) / 2))


def _norms(v):
    return np.linalg.norm(v, axis=-1, keepdims=True)


def mcp_threshold(eta_tilde, lambda1, lambda2, theta):
    """Group MCP proximal step, applied along the last axis."""
    if not theta * lambda2 > 1:
        raise InvalidConfig("MCP threshold needs theta * lambda2 > 1")
    v = np.asarray(eta_tilde, dtype=float)
    t = _norms(v)
    with np.errstate(divide="ignore", invalid="ignore"):
        shrink = np.where(t > 0, np.maximum(0.0, 1 - (lambda1 / lambda2) / t), 0.0)
    shrink *= theta * lambda2 / (theta * lambda2 - 1)
    return np.where(t >= theta * lambda1, v, shrink * v)


def scad_threshold(eta_tilde, lambda1, lambda2, theta):
    """Group SCAD proximal step, applied along the last axis."""
    if not theta > 1 + 1 / lambda2:
        raise InvalidConfig("SCAD threshold needs theta > 1 + 1/lambda2")
    v = np.asarray(eta_tilde, dtype=float)
    t = _norms(v)
    a = (theta - 1) * lambda2
    with np.errstate(divide="ignore", invalid="ignore"):
        soft = np.where(t > 0, np.maximum(0.0, 1 - (lambda1 / lambda2) / t), 0.0)
        mid = np.where(t > 0, (1 - theta * lambda1 / (a * t)) / (1 - 1 / a), 0.0)
    scale = np.where(t <= lambda1 + lambda1 / lambda2, soft, np.where(t < theta * lambda1, mid, 1.0))
    return scale * v


def threshold(eta_tilde, config: PenaltyConfig):
    f = mcp_threshold if config.kind == "mcp" else scad_threshold
    return f(eta_tilde, config.lambda1, config.lambda2, config.theta)


# pair bookkeeping


def pair_index(n: int):
    """Pairs (i, j), i < j, in lexicographic order."""
    i, j = np.triu_indices(n, k=1)
    return i, j


def incidence_matrix(n: int) -> sp.csr_matrix:
    """Sparse |pairs| x n matrix with +1 at i and -1 at j for pair (i, j)."""
    i, j = pair_index(n)
    P = i.size
    rows = np.repeat(np.arange(P), 2)
    cols = np.column_stack([i, j]).ravel()
    vals = np.tile([1.0, -1.0], P)
    return sp.csr_matrix((vals, (rows, cols)), shape=(P, n))


def difference_operator(n: int, p: int) -> np.ndarray:
    """Dense D = E kron I_p, mapping stacked gamma (np) to stacked pair differences."""
    return np.kron(incidence_matrix(n).toarray(), np.eye(p))


def extract_partition(eta, n: int, fuse_tol: float = 1e-10, ids=None) -> Partition:
    """Connected components of the graph whose edges are pairs with ||eta_ij|| <= fuse_tol."""
    eta = np.asarray(eta, dtype=float).reshape(n * (n - 1) // 2, -1)
    i, j = pair_index(n)
    fused = np.linalg.norm(eta, axis=1) <= fuse_tol
    adj = sp.coo_matrix((np.ones(fused.sum()), (i[fused], j[fused])), shape=(n, n))
    _, labels = connected_components(adj, directed=False)
    return Partition(tuple(int(g) for g in labels), ids)


# ADMM


@dataclass
class AdmmState:
    gamma: np.ndarray
    eta: np.ndarray
    xi: np.ndarray
    iteration: int = 0
    primal_residual_norm: float = np.inf
    dual_residual_norm: float = np.inf


@dataclass
class ClusterSolution:
    gamma_hat: np.ndarray
    partition: Partition
    group_means: np.ndarray
    coefficients: np.ndarray
    bic: float
    converged: bool
    iterations: int
    trace: dict = field(repr=False)
    state: AdmmState = field(repr=False)
    config: PenaltyConfig = None

    @property
    def G(self) -> int:
        return self.partition.G


def _selection(selection, p):
    if selection is None:
        return None
    C = np.asarray(selection, dtype=float)
    if C.ndim != 2 or C.shape[1] != p:
        raise InvalidConfig(f"selection matrix must have {p} columns")
    return C


def _initial_gamma(designs, ys, extra, S_factor, Wy):
    """Per-subject (penalized) least squares; falls back to the joint system if one is singular."""
    n, p = len(designs), designs[0].shape[1]
    gamma = np.empty((n, p))
    for k, (W, y) in enumerate(zip(designs, ys)):
        A = W.T @ W + (extra[k] if extra is not None else 0.0)
        ev = np.linalg.eigvalsh(A)
        if ev[0] <= RANK_RTOL**2 * max(ev[-1], 1e-300):
            return cho_solve(S_factor, Wy.ravel()).reshape(n, p)
        gamma[k] = np.linalg.solve(A, W.T @ y)
    return gamma


def _admm(designs, ys, config: PenaltyConfig, selection=None, extra=None, init: Optional[AdmmState] = None):
    n, p = len(designs), designs[0].shape[1]
    if n < 2:
        raise InvalidConfig("clustering needs at least two subjects")
    C = _selection(selection, p)
    s = p if C is None else C.shape[0]
    E = incidence_matrix(n)
    ET = E.T.tocsr()
    pi, pj = pair_index(n)
    P = pi.size
    l2 = config.lambda2

    CtC = np.eye(p) if C is None else C.T @ C
    S = np.kron(l2 * (n * np.eye(n) - np.ones((n, n))), CtC)
    Wy = np.empty((n, p))
    for k, (W, y) in enumerate(zip(designs, ys)):
        blk = slice(k * p, (k + 1) * p)
        S[blk, blk] += W.T @ W + (extra[k] if extra is not None else 0.0)
        Wy[k] = W.T @ y
    try:
        factor = cho_factor(S)
    except LinAlgError as exc:
        raise SingularGammaUpdate("gamma-update system is not positive definite") from exc

    def diff(g):
        d = g[pi] - g[pj]
        return d if C is None else d @ C.T

    def diff_adjoint(v):
        u = ET @ v
        return u if C is None else u @ C

    if init is None:
        gamma = _initial_gamma(designs, ys, extra, factor, Wy)
        xi = np.zeros((P, s))
        eta = threshold(diff(gamma), config)
    else:
        gamma, eta, xi = init.gamma.copy(), init.eta.copy(), init.xi.copy()

    kappa_n, tau_n, eps_k, eps_t = (np.empty(config.max_iter) for _ in range(4))
    root_pairs = np.sqrt(P * s) * config.eps_abs
    root_subj = np.sqrt(n * p) * config.eps_abs
    converged = False
    it = 0
    for it in range(1, config.max_iter + 1):
        rhs = Wy + l2 * diff_adjoint(eta + xi / l2)
        gamma = cho_solve(factor, rhs.ravel()).reshape(n, p)
        dg = diff(gamma)
        eta_new = threshold(dg - xi / l2, config)
        xi = xi + l2 * (eta_new - dg)
        kappa = np.linalg.norm(dg - eta_new)
        tau = l2 * np.linalg.norm(diff_adjoint(eta_new - eta))
        eta = eta_new
        pair_tol = root_pairs + config.eps_rel * max(np.linalg.norm(dg), np.linalg.norm(eta))
        subj_tol = root_subj + config.eps_rel * np.linalg.norm(diff_adjoint(xi))
        if config.tolerance_pairing == "as_written":
            pair_tol, subj_tol = subj_tol, pair_tol
        k = it - 1
        kappa_n[k], tau_n[k], eps_k[k], eps_t[k] = kappa, tau, pair_tol, subj_tol
        if kappa <= pair_tol and tau <= subj_tol:
            converged = True
            break
    trace = {
        "primal": kappa_n[:it].copy(),
        "dual": tau_n[:it].copy(),
        "eps_primal": eps_k[:it].copy(),
        "eps_dual": eps_t[:it].copy(),
    }
    state = AdmmState(gamma, eta, xi, it, float(kappa_n[it - 1]), float(tau_n[it - 1]))
    return state, converged, trace


def _summarize(state, n, p, config, selection, ids):
    part = extract_partition(state.eta, n, config.fuse_tol, ids)
    labels = part.as_array()
    means = np.vstack([state.gamma[labels == g].mean(axis=0) for g in range(part.G)])
    coef = means[labels]
    if selection is not None:
        # only the selected directions are fused; the rest stay subject specific
        C = np.asarray(selection, dtype=float)
        proj = np.linalg.pinv(C) @ C
        coef = state.gamma + (coef - state.gamma) @ proj.T
    return part, means, coef


def admm_fit(panel: PanelDataset, config: PenaltyConfig, selection=None,
             init: Optional[AdmmState] = None) -> ClusterSolution:
    designs, ys = panel.designs(), panel.responses()
    state, converged, trace = _admm(designs, ys, config, selection, init=init)
    part, means, coef = _summarize(state, panel.n, panel.p, config, selection, panel.ids)
    bic = cluster_bic(panel, coef, part.G)
    return ClusterSolution(state.gamma, part, means, coef, bic, converged, state.iteration, trace, state, config)


class LambdaSearch(NamedTuple):
    lambda1: float
    solution: ClusterSolution
    path: list


def tune_over_lambda(panel: PanelDataset, theta: float, lambda_grid, config: Optional[PenaltyConfig] = None,
                     selection=None, warm_start: bool = False) -> LambdaSearch:
    """BIC-minimizing lambda1 over the grid at fixed theta.

    With ``warm_start`` the grid is walked in descending order and each fit
    starts from the previous state. Ties in BIC go to the larger lambda1.
    ``path`` lists (lambda1, G, bic, converged, iterations) per grid point.
    """
    grid = sorted({float(v) for v in np.atleast_1d(lambda_grid)}, reverse=True)
    if not grid:
        raise InvalidConfig("lambda grid is empty")
    base = config if config is not None else PenaltyConfig()
    best, path, state = None, [], None
    for lam in grid:
        cfg = replace(base, theta=theta, lambda1=lam)
        sol = admm_fit(panel, cfg, selection, init=state if warm_start else None)
        state = sol.state
        path.append((lam, sol.G, sol.bic, sol.converged, sol.iterations))
        if best is None or sol.bic < best[1].bic:
            best = (lam, sol)
    path.sort(key=lambda row: row[0])
    return LambdaSearch(best[0], best[1], path)


class ConvexityCheck(NamedTuple):
    c_star: float
    admissible: bool
    theta_lower_bound: float


def convexity_check(panel: PanelDataset, theta: float, lambda1: float, partition: Partition,
                    kind: str = "mcp") -> ConvexityCheck:
    """Smallest eigenvalue of V'V / n with V = W (Pi kron I_p), and whether theta clears the bound.

    V'V is block diagonal over groups, one block sum_{i in g} W_i'W_i each.
    """
    designs = panel.designs()
    labels = partition.as_array()
    c_star = np.inf
    for g in range(partition.G):
        A = sum(designs[i].T @ designs[i] for i in np.flatnonzero(labels == g))
        c_star = min(c_star, np.linalg.eigvalsh(A / panel.n)[0])
    c_star = float(max(c_star, 0.0))
    if c_star <= 0:
        return ConvexityCheck(0.0, False, np.inf)
    bound = 1 / c_star if kind.lower() == "mcp" else 1 + 1 / c_star
    return ConvexityCheck(c_star, bool(theta > bound), bound)


@dataclass
class ThetaSearch:
    theta: float
    lambda1: float
    solution: ClusterSolution
    trace: list
    admissible: bool
    paths: dict = field(default_factory=dict)


def tune_theta_strategy(panel: PanelDataset, theta_schedule, lambda_grid, kind: str = "mcp",
                        config: Optional[PenaltyConfig] = None, selection=None) -> ThetaSearch:
    """Walk the ascending theta schedule until theta lands in the convex region.

    At each theta: pick lambda1 by BIC, compute c*, accept if admissible.
    When no theta is admissible, the best-BIC (theta, lambda1) is returned
    with ``admissible=False``. ``trace`` holds (theta, lambda1, c*, admissible);
    ``paths`` maps each visited theta to its lambda path.
    """
    schedule = sorted(float(t) for t in np.atleast_1d(theta_schedule))
    if not schedule:
        raise InvalidConfig("theta schedule is empty")
    base = replace(config if config is not None else PenaltyConfig(), kind=kind)
    trace, paths, best = [], {}, None
    for theta in schedule:
        lam, sol, path = tune_over_lambda(panel, theta, lambda_grid, replace(base, theta=theta), selection)
        paths[theta] = path
        check = convexity_check(panel, theta, lam, sol.partition, kind)
        trace.append((theta, lam, check.c_star, check.admissible))
        if check.admissible:
            return ThetaSearch(theta, lam, sol, trace, True, paths)
        if best is None or sol.bic < best[2].bic:
            best = (theta, lam, sol)
    return ThetaSearch(best[0], best[1], best[2], trace, False, paths)


# B&R-clust


def raw_designs(panel: PanelDataset) -> list:
    """[Z | X] per subject with the untransformed high-frequency lags."""
    out = []
    for s in panel.subjects:
        X = np.asarray(s.X, dtype=float)
        if X.ndim != 2:
            raise InvalidConfig("B&R-clust needs a constant frequency ratio")
        out.append(np.hstack([s.Z, X]))
    return out


def _smoothing_penalty(q: int, m: int) -> np.ndarray:
    A = np.hstack([np.zeros((m - 2, q)), second_difference_matrix(m)])
    return A.T @ A


def smoother_df(W, AtA, theta_smooth) -> float:
    G = W.T @ W
    return float(np.trace(np.linalg.solve(G + theta_smooth * AtA, G)))


def smoothing_aic(designs, ys, AtA, theta_smooth):
    """Sum over subjects of log(RSS_i / T) + 2 df_i / T for subject-wise smoothed fits."""
    total, dfs = 0.0, []
    for W, y in zip(designs, ys):
        G = W.T @ W + theta_smooth * AtA
        try:
            g = np.linalg.solve(G, W.T @ y)
        except np.linalg.LinAlgError as exc:
            raise RankDeficient(f"smoothed design singular at theta_smooth={theta_smooth}") from exc
        r = y - W @ g
        df = smoother_df(W, AtA, theta_smooth)
        dfs.append(df)
        total += np.log(r @ r / y.size) + 2 * df / y.size
    return float(total), np.array(dfs)


def select_smoothing(designs, ys, AtA, grid=None):
    grid = np.linspace(0, 100, 101) if grid is None else np.asarray(grid, dtype=float)
    best = None
    for t in grid:
        try:
            score, dfs = smoothing_aic(designs, ys, AtA, t)
        except RankDeficient:
            continue
        if best is None or score < best[0]:
            best = (score, float(t), dfs)
    if best is None:
        raise RankDeficient("no smoothing level gives a solvable subject fit")
    return best[1], best[2]


def br_clust_fit(panel: PanelDataset, config: PenaltyConfig, theta_smooth: Optional[float] = None,
                 smoothing_grid=None, selection=None, init: Optional[AdmmState] = None) -> ClusterSolution:
    """Fused clustering on the raw lag designs with a second-difference smoothing term.

    ``theta_smooth=None`` selects the smoothing level by the subject-wise AIC.
    The returned BIC charges each group the mean smoother df.
    """
    designs = raw_designs(panel)
    ys = panel.responses()
    q, m = panel.q, designs[0].shape[1] - panel.q
    AtA = _smoothing_penalty(q, m)
    if theta_smooth is None:
        theta_smooth, dfs = select_smoothing(designs, ys, AtA, smoothing_grid)
    else:
        dfs = np.array([smoother_df(W, AtA, theta_smooth) for W in designs])
    extra = [theta_smooth * AtA] * len(designs)
    state, converged, trace = _admm(designs, ys, config, selection, extra, init)
    part, means, coef = _summarize(state, panel.n, designs[0].shape[1], config, selection, panel.ids)
    bic = cluster_bic(panel, coef, part.G, df_per_group=float(dfs.mean()), designs=designs)
    trace["theta_smooth"] = theta_smooth
    return ClusterSolution(state.gamma, part, means, coef, bic, converged, state.iteration, trace, state, config)
