from dataclasses import replace

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from midasclust.clustering import (
    PenaltyConfig,
    _admm,
    admm_fit,
    br_clust_fit,
    convexity_check,
    difference_operator,
    extract_partition,
    incidence_matrix,
    mcp_penalty,
    mcp_threshold,
    pair_index,
    raw_designs,
    scad_penalty,
    scad_threshold,
    tune_over_lambda,
    tune_theta_strategy,
)
from midasclust.errors import InvalidConfig
from midasclust.fourier_midas import FourierBasis, transform_regressors
from midasclust.metrics import rand_index
from midasclust.panel_core import MidasSeries, PanelDataset, Partition, oracle_estimator
from midasclust.simulation import generate_two_cluster_panel
from oracles import min_eig_inverse_power, mcp_rho, prox_grid_2d, scad_rho
from panels import raw_lag_panel, well_separated_panel

# config


def test_config_validation():
    with pytest.raises(InvalidConfig):
        PenaltyConfig(theta=0.9)
    with pytest.raises(InvalidConfig):
        PenaltyConfig(kind="scad", theta=1.9)
    with pytest.raises(InvalidConfig):
        PenaltyConfig(lambda2=0)
    with pytest.raises(InvalidConfig):
        PenaltyConfig(lambda1=-1)
    with pytest.raises(InvalidConfig):
        PenaltyConfig(kind="lasso")
    with pytest.raises(InvalidConfig):
        PenaltyConfig(tolerance_pairing="other")
    assert PenaltyConfig(kind="SCAD", theta=3.7).kind == "scad"
    c = PenaltyConfig()
    assert (c.lambda2, c.max_iter, c.eps_abs, c.eps_rel, c.fuse_tol) == (1.0, 3000, 1e-4, 1e-3, 1e-10)


# thresholds


def test_mcp_examples():
    v = np.array([3.0, 4.0])
    np.testing.assert_array_equal(mcp_threshold(v, 1, 1, 2), v)
    np.testing.assert_array_equal(mcp_threshold([0.3, 0.4], 1, 1, 3), [0, 0])
    np.testing.assert_allclose(mcp_threshold([1.5, 0.0], 1, 1, 3), [0.75, 0.0])
    np.testing.assert_array_equal(mcp_threshold([0.0, 0.0], 1, 1, 3), [0, 0])
    with pytest.raises(InvalidConfig):
        mcp_threshold(v, 1, 1, 1)


def test_scad_examples():
    v = np.array([3.0, 4.0])
    np.testing.assert_array_equal(scad_threshold(v, 1, 1, 3.7), v)
    np.testing.assert_array_equal(scad_threshold([0.0, 0.0], 1, 1, 3.7), [0, 0])
    with pytest.raises(InvalidConfig):
        scad_threshold(v, 1, 1, 2.0)


def test_threshold_rowwise():
    rows = np.array([[3.0, 4.0], [0.3, 0.4], [1.5, 0.0]])
    out = mcp_threshold(rows, 1, 1, 3)
    for r, o in zip(rows, out):
        np.testing.assert_allclose(o, mcp_threshold(r, 1, 1, 3))


@pytest.mark.parametrize("kind", ["mcp", "scad"])
def test_prox_against_grid(kind):
    r = np.random.default_rng(11)
    for _ in range(15):
        l1, l2 = r.uniform(0.3, 2.0), r.uniform(0.5, 2.0)
        theta = (1 / l2 if kind == "mcp" else 1 + 1 / l2) + r.uniform(0.2, 3.0)
        eta = r.normal(size=2) * r.uniform(0.1, 2.5) * theta * l1
        f, rho = (mcp_threshold, mcp_rho) if kind == "mcp" else (scad_threshold, scad_rho)
        np.testing.assert_allclose(f(eta, l1, l2, theta), prox_grid_2d(eta, l1, l2, theta, rho), atol=1e-4)


def test_scad_middle_branch_1d():
    l1, l2, theta = 1.0, 1.0, 3.7
    for t in np.linspace(2.05, 3.65, 9):
        g = np.linspace(0, t, 200001)
        obj = 0.5 * (g - t) ** 2 + scad_rho(g, l1, theta)
        assert scad_threshold([t], l1, l2, theta)[0] == pytest.approx(g[np.argmin(obj)], abs=1e-4)


@pytest.mark.parametrize("penalty", [mcp_penalty, scad_penalty])
def test_penalty_axioms(penalty):
    lam, theta = 0.7, 3.7
    t = np.linspace(0, 10, 20001)
    rho = penalty(t, lam, theta)
    assert rho[0] == 0
    assert (penalty(1e-8, lam, theta) / 1e-8) / lam == pytest.approx(1.0, abs=1e-6)
    assert np.all(np.diff(rho) >= -1e-15)
    second = np.diff(rho, 2)
    assert np.all(second <= 1e-12)
    flat = t >= theta * lam
    assert np.ptp(rho[flat]) < 1e-12
    np.testing.assert_allclose(penalty(-t, lam, theta), rho)


# pair operators


@pytest.mark.parametrize("n", [2, 3, 5])
def test_dtd_structure(n):
    p = 3
    D = difference_operator(n, p)
    assert D.shape == (n * (n - 1) // 2 * p, n * p)
    expected = np.kron(n * np.eye(n) - np.ones((n, n)), np.eye(p))
    np.testing.assert_array_equal(D.T @ D, expected)
    E = incidence_matrix(n).toarray()
    i, j = pair_index(n)
    assert list(zip(i, j)) == [(a, b) for a in range(n) for b in range(a + 1, n)]
    assert np.all(E.sum(axis=1) == 0)


def test_extract_partition_cases():
    n, p = 4, 2
    P = n * (n - 1) // 2
    assert extract_partition(np.zeros((P, p)), n).G == 1
    assert extract_partition(np.ones((P, p)), n).G == 4
    eta = np.ones((3, p))
    eta[0] = 0  # (0,1)
    eta[2] = 0  # (1,2); (0,2) left large
    assert extract_partition(eta, 3).labels == (0, 0, 0)
    eta = np.ones((P, p))
    eta[5] = 1e-11  # (2,3)
    assert extract_partition(eta, n).labels == (0, 1, 2, 2)


# ADMM


def test_identical_subjects_fuse(rng):
    X = rng.standard_normal((50, 12))
    y = X @ np.linspace(1, 0, 12) + 0.1 * rng.standard_normal(50)
    panel = PanelDataset([MidasSeries("a", y, np.ones(50), X), MidasSeries("b", y, np.ones(50), X)],
                         FourierBasis(1, 1))
    sol = admm_fit(panel, PenaltyConfig(lambda1=0.5))
    assert sol.G == 1
    np.testing.assert_allclose(sol.coefficients[0], sol.coefficients[1])


def test_single_subject_rejected(rng):
    panel = PanelDataset([MidasSeries("a", rng.standard_normal(30), None, rng.standard_normal((30, 5)))],
                         FourierBasis(1, 1))
    with pytest.raises(InvalidConfig):
        admm_fit(panel, PenaltyConfig())


@pytest.fixture(scope="module")
def two_cluster():
    return generate_two_cluster_panel(15, seed=4)


def test_solution_invariants(two_cluster):
    panel, truth, _ = two_cluster
    sol = admm_fit(panel, PenaltyConfig(theta=2.5, lambda1=3.0))
    labels = sol.partition.as_array()
    assert sol.partition.n == panel.n
    for g in range(sol.G):
        members = labels == g
        np.testing.assert_allclose(sol.gamma_hat[members].mean(axis=0), sol.group_means[g], atol=1e-12)
        block = sol.coefficients[members]
        assert np.max(np.abs(block - block[0])) <= 1e-6
    assert sol.state.primal_residual_norm >= 0 and sol.state.dual_residual_norm >= 0
    P = panel.n * (panel.n - 1) // 2
    assert sol.state.eta.shape == sol.state.xi.shape == (P, panel.p)


def test_kappa_window_monotone(two_cluster):
    panel, _, _ = two_cluster
    for theta, lam in ((2.5, 1.0), (2.5, 3.0), (2.0, 3.0)):
        sol = admm_fit(panel, PenaltyConfig(theta=theta, lambda1=lam))
        k = sol.trace["primal"]
        assert np.all(k[50:] <= k[:-50] + 1e-6)


def test_stopping_rule_pairing(two_cluster):
    panel, _, _ = two_cluster
    sol = admm_fit(panel, PenaltyConfig(theta=2.5, lambda1=3.0))
    t = sol.trace
    assert sol.converged
    assert t["primal"][-1] <= t["eps_primal"][-1] and t["dual"][-1] <= t["eps_dual"][-1]
    n, p, P = panel.n, panel.p, panel.n * (panel.n - 1) // 2
    # the pair-space tolerance starts at sqrt(|pairs| p) eps_abs
    assert t["eps_primal"][-1] >= np.sqrt(P * p) * 1e-4
    assert t["eps_dual"][-1] >= np.sqrt(n * p) * 1e-4
    literal = admm_fit(panel, PenaltyConfig(theta=2.5, lambda1=3.0, tolerance_pairing="as_written"))
    assert literal.trace["eps_dual"][-1] >= np.sqrt(P * p) * 1e-4


def test_lambda_zero_gives_singletons(two_cluster):
    panel, _, _ = two_cluster
    small = panel.subset(range(0, 30, 5))
    lam, sol, path = tune_over_lambda(small, 2.5, [0.0])
    assert lam == 0.0 and sol.G == small.n
    _, ols = oracle_estimator(small, Partition(tuple(range(small.n))))
    np.testing.assert_allclose(sol.coefficients, ols, atol=1e-3)


def test_single_grid_value(two_cluster):
    panel, _, _ = two_cluster
    lam, sol, path = tune_over_lambda(panel.subset(range(0, 30, 3)), 2.5, [2.0])
    assert lam == 2.0 and len(path) == 1
    with pytest.raises(InvalidConfig):
        tune_over_lambda(panel, 2.5, [])


def test_tune_path_and_warm_start(two_cluster):
    panel, truth, _ = two_cluster
    lam, sol, path = tune_over_lambda(panel, 2.5, [3.0, 4.0])
    assert [row[0] for row in path] == [3.0, 4.0]
    assert min(row[2] for row in path) == sol.bic
    assert rand_index(truth, sol.partition) == 1.0
    lam_w, sol_w, _ = tune_over_lambda(panel, 2.5, [3.0, 4.0], warm_start=True)
    assert sol_w.partition == sol.partition


def test_permutation_equivariance():
    panel, truth, _ = well_separated_panel(2, n=6)
    cfg = PenaltyConfig(lambda1=5.0)
    base = admm_fit(panel, cfg)
    perm = [3, 0, 5, 1, 4, 2]
    shuffled = admm_fit(panel.subset(perm), cfg)
    assert rand_index(base.partition.as_array()[perm], shuffled.partition) == 1.0
    np.testing.assert_allclose(shuffled.coefficients, base.coefficients[perm], atol=1e-8)


# convexity check


def test_convexity_identity_spectrum():
    # two subjects with orthonormal designs: V'V / n = I
    rng = np.random.default_rng(0)
    subjects = []
    for i in range(2):
        Q, _ = np.linalg.qr(rng.standard_normal((30, 3)))
        subjects.append(MidasSeries(i, rng.standard_normal(30), Q, np.zeros((30, 1))))
    panel = PanelDataset(subjects, FourierBasis(0, 0))
    # the zero high-frequency block adds a null column; use a selection-free q-only design instead
    panel._designs = [s.Z for s in subjects]
    chk = convexity_check(panel, 1.5, 1.0, Partition((0, 0)))
    assert chk.c_star == pytest.approx(1.0)
    assert chk.admissible and chk.theta_lower_bound == pytest.approx(1.0)
    assert not convexity_check(panel, 0.99, 1.0, Partition((0, 0))).admissible
    assert convexity_check(panel, 2.1, 1.0, Partition((0, 0)), kind="scad").admissible
    assert not convexity_check(panel, 1.9, 1.0, Partition((0, 0)), kind="scad").admissible


def test_convexity_singular():
    rng = np.random.default_rng(0)
    subjects = [MidasSeries(i, rng.standard_normal(5), None, rng.standard_normal((5, 20))) for i in range(2)]
    panel = PanelDataset(subjects, FourierBasis(2, 3))
    chk = convexity_check(panel, 2.5, 1.0, Partition((0, 1)))
    assert chk.c_star == 0.0 and not chk.admissible


def test_convexity_eigen_oracle(two_cluster):
    panel, truth, _ = two_cluster
    chk = convexity_check(panel, 2.0, 3.0, truth)
    labels = truth.as_array()
    vals = []
    for g in range(truth.G):
        A = sum(panel.designs()[i].T @ panel.designs()[i] for i in np.flatnonzero(labels == g)) / panel.n
        vals.append(min_eig_inverse_power(A))
    assert chk.c_star == pytest.approx(min(vals), rel=1e-6)
    assert not chk.admissible


def test_theta_strategy_bookkeeping(two_cluster):
    panel, truth, _ = two_cluster
    small = panel.subset(list(range(5)) + list(range(15, 20)))
    res = tune_theta_strategy(small, [2.0, 2.5], [3.0])
    assert len(res.trace) == 2 and [t[0] for t in res.trace] == [2.0, 2.5]
    assert all(len(t) == 4 for t in res.trace)
    assert not res.admissible
    assert set(res.paths) == {2.0, 2.5}
    best = min((p[0][2], th) for th, p in res.paths.items())
    assert res.theta == best[1]


def test_theta_strategy_advances_to_convex_region():
    panel, truth, _ = well_separated_panel(0, n=6)
    bound = convexity_check(panel, 1.0, 5.0, truth).theta_lower_bound
    res = tune_theta_strategy(panel, [1.01 + 0.5 * bound, 1.5 * bound, 3 * bound], [5.0])
    assert res.admissible and res.theta == 1.5 * bound and len(res.trace) == 2
    assert [t[3] for t in res.trace] == [False, True]
    assert rand_index(truth, res.solution.partition) == 1.0


# selection matrix


def test_selection_clusters_on_slopes_only(rng):
    basis = FourierBasis(1, 1)
    slope = np.array([0.4, -0.2, 0.1, 0.05])
    subjects = []
    for i in range(6):
        X = rng.standard_normal((80, 12))
        Z = np.ones(80)
        y = 3.0 * i + transform_regressors(X, basis) @ slope + 0.01 * rng.standard_normal(80)
        subjects.append(MidasSeries(f"s{i}", y, Z, X))
    panel = PanelDataset(subjects, basis)
    full = admm_fit(panel, PenaltyConfig(lambda1=0.5))
    assert full.G == 6
    C = np.eye(panel.p)[1:]
    part = admm_fit(panel, PenaltyConfig(lambda1=0.5), selection=C)
    assert part.G == 1
    intercepts = part.coefficients[:, 0]
    np.testing.assert_allclose(intercepts, 3.0 * np.arange(6), atol=0.05)
    np.testing.assert_allclose(part.coefficients[:, 1:], part.coefficients[0, 1:][None, :].repeat(6, 0))
    with pytest.raises(InvalidConfig):
        admm_fit(panel, PenaltyConfig(), selection=np.eye(3))


# smoothed raw-design variant


def test_br_clust_zero_smoothing_is_raw_admm():
    panel, truth, _ = raw_lag_panel(1)
    cfg = PenaltyConfig(lambda1=1.0)
    sol = br_clust_fit(panel, cfg, theta_smooth=0.0)
    state, conv, _ = _admm(raw_designs(panel), panel.responses(), cfg)
    np.testing.assert_allclose(sol.gamma_hat, state.gamma, atol=1e-12)
    assert sol.trace["theta_smooth"] == 0.0


def test_br_clust_matches_oracle_toy():
    panel, truth, _ = raw_lag_panel(3, gap=20.0)
    cfg = PenaltyConfig(lambda1=2.0, eps_abs=1e-13, eps_rel=0.0, max_iter=30000)
    sol = br_clust_fit(panel, cfg, theta_smooth=0.0)
    assert sol.converged and rand_index(truth, sol.partition) == 1.0
    designs, ys = raw_designs(panel), panel.responses()
    labels = truth.as_array()
    for g in range(2):
        idx = np.flatnonzero(labels == g)
        A = sum(designs[i].T @ designs[i] for i in idx)
        b = sum(designs[i].T @ ys[i] for i in idx)
        np.testing.assert_allclose(sol.coefficients[idx], np.linalg.solve(A, b)[None, :].repeat(idx.size, 0),
                                   atol=1e-6)


def test_br_clust_selects_smoothing():
    panel, truth, _ = raw_lag_panel(2, noise_sd=0.5)
    sol = br_clust_fit(panel, PenaltyConfig(lambda1=2.0), smoothing_grid=[0.0, 1.0, 10.0])
    assert sol.trace["theta_smooth"] in (0.0, 1.0, 10.0)
    assert np.isfinite(sol.bic)


@given(st.floats(0.05, 5.0))
def test_threshold_fixed_points(l1):
    # both maps leave vectors beyond theta * lambda1 untouched and kill tiny ones
    v = np.array([l1 * 4.0, 0.0])
    assert np.array_equal(mcp_threshold(v, l1, 1.0, 3.7), v)
    assert np.array_equal(scad_threshold(v, l1, 1.0, 3.7), v)
    w = np.array([l1 * 0.5, 0.0])
    assert not np.any(mcp_threshold(w, l1, 1.0, 3.7))
    assert not np.any(scad_threshold(w, l1, 1.0, 3.7))


def test_config_replace_revalidates():
    with pytest.raises(InvalidConfig):
        replace(PenaltyConfig(), theta=0.5)
