"""Panel of MIDAS regressions, group partitions and the oracle estimator."""

from dataclasses import dataclass, field
from typing import Hashable, Optional, Sequence

import numpy as np

from .errors import DimensionMismatch, GroupRankDeficient, InvalidConfig
from .fourier_midas import RANK_RTOL, FourierBasis, HighFreq, period_lengths, transform_regressors


@dataclass
class MidasSeries:
    """One subject: response y (T), covariates Z (T x q) and high-frequency rows."""

    id: Hashable
    y: np.ndarray
    Z: Optional[np.ndarray]
    X: HighFreq

    def __post_init__(self):
        self.y = np.asarray(self.y, dtype=float).ravel()
        T = self.y.size
        if self.Z is None:
            self.Z = np.empty((T, 0))
        self.Z = np.asarray(self.Z, dtype=float)
        if self.Z.ndim == 1:
            self.Z = self.Z[:, None]
        if self.Z.shape[0] != T:
            raise DimensionMismatch(f"subject {self.id}: Z has {self.Z.shape[0]} rows, y has {T}")
        if len(self.X) != T:
            raise DimensionMismatch(f"subject {self.id}: {len(self.X)} high-frequency rows, y has {T}")

    @property
    def T(self) -> int:
        return self.y.size

    @property
    def q(self) -> int:
        return self.Z.shape[1]

    @property
    def period_m(self) -> np.ndarray:
        return period_lengths(self.X)


def build_subject_design(series: MidasSeries, basis: FourierBasis) -> np.ndarray:
    return np.hstack([series.Z, transform_regressors(series.X, basis)])


@dataclass
class PanelDataset:
    subjects: list
    basis: FourierBasis
    _designs: Optional[list] = field(default=None, init=False, repr=False)

    def __post_init__(self):
        self.subjects = list(self.subjects)
        if not self.subjects:
            raise InvalidConfig("panel has no subjects")
        ids = [s.id for s in self.subjects]
        if len(set(ids)) != len(ids):
            raise InvalidConfig("subject ids are not unique")
        qs = {s.q for s in self.subjects}
        if len(qs) != 1:
            raise InvalidConfig(f"subjects disagree on the number of covariates: {sorted(qs)}")

    @property
    def n(self) -> int:
        return len(self.subjects)

    @property
    def q(self) -> int:
        return self.subjects[0].q

    @property
    def p(self) -> int:
        return self.q + self.basis.r

    @property
    def ids(self) -> list:
        return [s.id for s in self.subjects]

    def designs(self) -> list:
        if self._designs is None:
            self._designs = [build_subject_design(s, self.basis) for s in self.subjects]
        return self._designs

    def responses(self) -> list:
        return [s.y for s in self.subjects]

    def subset(self, index: Sequence[int]) -> "PanelDataset":
        return PanelDataset([self.subjects[i] for i in index], self.basis)


def canonical_labels(labels) -> tuple:
    """Relabel groups 0, 1, ... in order of first appearance."""
    seen = {}
    return tuple(seen.setdefault(g, len(seen)) for g in labels)


@dataclass(frozen=True)
class Partition:
    """Group labels over subjects, canonicalized by first appearance."""

    labels: tuple
    ids: Optional[tuple] = None

    def __post_init__(self):
        object.__setattr__(self, "labels", canonical_labels(self.labels))
        if self.ids is not None:
            object.__setattr__(self, "ids", tuple(self.ids))
            if len(self.ids) != len(self.labels):
                raise DimensionMismatch("ids and labels differ in length")

    @classmethod
    def from_groups(cls, groups, ids=None) -> "Partition":
        """Build from a list of member collections (indices, or ids when ``ids`` is given)."""
        pos = {s: k for k, s in enumerate(ids)} if ids is not None else None
        n = sum(len(g) for g in groups)
        labels = [-1] * n
        for g, members in enumerate(groups):
            if not members:
                raise InvalidConfig("empty group")
            for s in members:
                i = pos[s] if pos is not None else s
                if labels[i] != -1:
                    raise InvalidConfig(f"subject {s} is in more than one group")
                labels[i] = g
        if -1 in labels:
            raise InvalidConfig("groups do not cover every subject")
        return cls(tuple(labels), ids)

    @property
    def n(self) -> int:
        return len(self.labels)

    @property
    def G(self) -> int:
        return max(self.labels) + 1 if self.labels else 0

    @property
    def groups(self) -> list:
        names = self.ids if self.ids is not None else range(self.n)
        out = [[] for _ in range(self.G)]
        for s, g in zip(names, self.labels):
            out[g].append(s)
        return out

    def as_array(self) -> np.ndarray:
        return np.asarray(self.labels, dtype=int)


def _group_gram(designs, ys, members):
    A = sum(designs[i].T @ designs[i] for i in members)
    b = sum(designs[i].T @ ys[i] for i in members)
    return A, b


def oracle_estimator(panel: PanelDataset, partition: Partition):
    """Group-pooled least squares given the partition.

    Returns (phi, gamma): phi is G x p, gamma is n x p with gamma[i] = phi[g(i)].
    """
    if partition.n != panel.n:
        raise DimensionMismatch(f"partition covers {partition.n} subjects, panel has {panel.n}")
    designs, ys = panel.designs(), panel.responses()
    labels = partition.as_array()
    phi = np.empty((partition.G, panel.p))
    for g in range(partition.G):
        A, b = _group_gram(designs, ys, np.flatnonzero(labels == g))
        ev = np.linalg.eigvalsh(A)
        if ev[0] <= RANK_RTOL**2 * ev[-1]:
            raise GroupRankDeficient(g, np.inf if ev[0] <= 0 else np.sqrt(ev[-1] / ev[0]))
        phi[g] = np.linalg.solve(A, b)
    return phi, phi[labels]


def residual_ss(panel: PanelDataset, gamma: np.ndarray, designs=None) -> float:
    designs = panel.designs() if designs is None else designs
    gamma = np.asarray(gamma, dtype=float).reshape(panel.n, -1)
    return float(sum(np.sum((y - W @ g) ** 2) for W, y, g in zip(designs, panel.responses(), gamma)))


def cluster_bic(panel: PanelDataset, gamma_hat, G: int, df_per_group: Optional[float] = None,
                per_observation: bool = False, designs=None) -> float:
    """log(RSS / n) + log(n) * G * p / n over subjects.

    ``df_per_group`` replaces p (B&R-clust uses the mean smoother df), and
    ``per_observation`` swaps n for the total observation count nT.
    ``designs`` overrides the panel's Fourier designs.
    """
    rss = residual_ss(panel, gamma_hat, designs)
    n = sum(s.T for s in panel.subjects) if per_observation else panel.n
    k = panel.p if df_per_group is None else df_per_group
    return float(np.log(rss / n) + np.log(n) * G * k / n)
