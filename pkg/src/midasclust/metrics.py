"""Partition agreement scores and coefficient accuracy."""

from dataclasses import dataclass

import numpy as np
from scipy.special import comb

from .errors import DimensionMismatch, SubjectSetMismatch
from .panel_core import Partition


@dataclass(frozen=True)
class ConfusionCounts:
    TP: int
    TN: int
    FP: int
    FN: int

    @property
    def pairs(self) -> int:
        return self.TP + self.TN + self.FP + self.FN


def _aligned_labels(a, b):
    if isinstance(a, Partition) and isinstance(b, Partition) and a.ids is not None and b.ids is not None:
        if set(a.ids) != set(b.ids) or len(a.ids) != len(b.ids):
            raise SubjectSetMismatch("partitions cover different subjects")
        pos = {s: k for k, s in enumerate(b.ids)}
        lb = np.asarray(b.labels)[[pos[s] for s in a.ids]]
        return np.asarray(a.labels), lb
    la = np.asarray(a.labels if isinstance(a, Partition) else a)
    lb = np.asarray(b.labels if isinstance(b, Partition) else b)
    if la.shape != lb.shape:
        raise SubjectSetMismatch(f"partitions cover {la.size} and {lb.size} subjects")
    return la, lb


def _contingency(la, lb):
    _, ia = np.unique(la, return_inverse=True)
    _, ib = np.unique(lb, return_inverse=True)
    table = np.zeros((ia.max() + 1, ib.max() + 1), dtype=np.int64)
    np.add.at(table, (ia, ib), 1)
    return table


def pair_counts(a, b) -> ConfusionCounts:
    """Pair confusion counts, treating ``a`` as the reference partition."""
    la, lb = _aligned_labels(a, b)
    n = la.size
    table = _contingency(la, lb)
    tp = int(comb(table, 2).sum().round())
    same_a = int(comb(table.sum(axis=1), 2).sum().round())
    same_b = int(comb(table.sum(axis=0), 2).sum().round())
    total = n * (n - 1) // 2
    fn = same_a - tp
    fp = same_b - tp
    return ConfusionCounts(tp, total - tp - fp - fn, fp, fn)


def rand_index(a, b) -> float:
    c = pair_counts(a, b)
    if c.pairs == 0:
        return 1.0
    return (c.TP + c.TN) / c.pairs


def adjusted_rand(a, b) -> float:
    """Hubert-Arabie ARI. A zero denominator gives 1 for identical partitions, else 0."""
    la, lb = _aligned_labels(a, b)
    table = _contingency(la, lb)
    n = la.size
    # integer pair counts, one final division, so the result is correctly rounded
    index = int(comb(table, 2).sum().round())
    sa = int(comb(table.sum(axis=1), 2).sum().round())
    sb = int(comb(table.sum(axis=0), 2).sum().round())
    total = n * (n - 1) // 2
    num = 2 * (index * total - sa * sb)
    den = total * (sa + sb) - 2 * sa * sb
    if den == 0:
        identical = (table > 0).sum(axis=0).max() == 1 and (table > 0).sum(axis=1).max() == 1
        return 1.0 if identical else 0.0
    return num / den


def jaccard(a, b) -> float:
    c = pair_counts(a, b)
    denom = c.TP + c.FP + c.FN
    if denom == 0:
        return 1.0
    return c.TP / denom


def weight_rmse(beta_hat, beta_true) -> float:
    """sqrt(n^-1 sum_i ||b_hat_i - b_i||^2) over subjects."""
    bh = [np.asarray(b, dtype=float).ravel() for b in beta_hat]
    bt = [np.asarray(b, dtype=float).ravel() for b in beta_true]
    if len(bh) != len(bt) or any(x.shape != y.shape for x, y in zip(bh, bt)):
        raise DimensionMismatch("estimated and true weights do not line up")
    if not bh:
        return 0.0
    return float(np.sqrt(np.mean([np.sum((x - y) ** 2) for x, y in zip(bh, bt)])))


def per_lag_rmse(beta_hat, beta_true) -> float:
    """Root mean square error across lags and subjects (weight_rmse / sqrt(m))."""
    bh = np.asarray(beta_hat, dtype=float)
    bt = np.asarray(beta_true, dtype=float)
    if bh.shape != bt.shape:
        raise DimensionMismatch(f"shapes {bh.shape} and {bt.shape} differ")
    return float(np.sqrt(np.mean((bh - bt) ** 2)))
