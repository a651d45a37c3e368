"""Fourier-basis MIDAS regression and penalized clustering of panels of such regressions."""

__version__ = "0.1.0"

from .br_baseline import fit_br_sls, select_lambda_br
from .clustering import (
    PenaltyConfig,
    admm_fit,
    br_clust_fit,
    convexity_check,
    tune_over_lambda,
    tune_theta_strategy,
)
from .errors import MidasError, RankDeficient, SchemaError
from .fourier_midas import FourierBasis, fit_midas_ols, rolling_rmsfe, select_basis
from .metrics import adjusted_rand, jaccard, rand_index, weight_rmse
from .panel_core import MidasSeries, PanelDataset, Partition, oracle_estimator
from .simulation import Cell, DgpConfig, generate_two_cluster_panel, run_mc

__all__ = [
    "Cell", "DgpConfig", "FourierBasis", "MidasError", "MidasSeries", "PanelDataset", "Partition",
    "PenaltyConfig", "RankDeficient", "SchemaError", "adjusted_rand", "admm_fit", "br_clust_fit",
    "convexity_check", "fit_br_sls", "fit_midas_ols", "generate_two_cluster_panel", "jaccard",
    "oracle_estimator", "rand_index", "rolling_rmsfe", "run_mc", "select_basis", "select_lambda_br",
    "tune_over_lambda", "tune_theta_strategy", "weight_rmse",
]
