"""Clustered point sets, power diagrams, and margin bookkeeping.

Cluster and site indices are 0-based throughout the Python API. File formats
carry their own label tokens (see :mod:`softpd.formats`).

A power diagram is stored in its linear ``(S, gamma)`` form: cell ``i`` is the
set of ``x`` with ``(s_j - s_i)^T x <= gamma_j - gamma_i`` for all ``j != i``.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

TAU_NUM = 1e-7
TAU_SITE = 1e-10


class GeometryError(ValueError):
    """Invalid or degenerate geometric input."""


def _as_matrix(values, name: str) -> np.ndarray:
    arr = np.array(values, dtype=float)
    if arr.ndim == 1:
        arr = arr.reshape(-1, 1)
    if arr.ndim != 2:
        raise GeometryError(f"{name} must be a 2-D array of shape (count, d)")
    if not np.all(np.isfinite(arr)):
        raise GeometryError(f"{name} contains non-finite values")
    arr.setflags(write=False)
    return arr


def _min_pair_distance(rows: np.ndarray) -> float:
    if len(rows) < 2:
        return np.inf
    diff = rows[:, None, :] - rows[None, :, :]
    dist = np.sqrt((diff**2).sum(axis=2))
    iu = np.triu_indices(len(rows), 1)
    return float(dist[iu].min())


@dataclass(frozen=True)
class Dataset:
    """Points in R^d together with a partition into k nonempty clusters.

    ``labels[l]`` is the 0-based cluster of ``points[l]``.
    """

    points: np.ndarray
    labels: np.ndarray
    k: int = field(default=0)

    def __post_init__(self):
        pts = _as_matrix(self.points, "points")
        labels = np.array(self.labels, dtype=int).reshape(-1)
        if len(labels) != len(pts):
            raise GeometryError("points and labels differ in length")
        k = int(self.k) if self.k else (int(labels.max()) + 1 if len(labels) else 0)
        if len(pts) < 2:
            raise GeometryError("need at least two points")
        if k < 2:
            raise GeometryError("need at least two clusters")
        if labels.min() < 0 or labels.max() >= k:
            raise GeometryError(f"labels must lie in 0..{k - 1}")
        sizes = np.bincount(labels, minlength=k)
        if np.any(sizes == 0):
            empty = [int(i) for i in np.flatnonzero(sizes == 0)]
            raise GeometryError(f"empty clusters: {empty}")
        labels.setflags(write=False)
        object.__setattr__(self, "points", pts)
        object.__setattr__(self, "labels", labels)
        object.__setattr__(self, "k", k)
        means = np.array([pts[labels == i].mean(axis=0) for i in range(k)])
        if _min_pair_distance(means) <= TAU_SITE:
            raise GeometryError("cluster means are not pairwise distinct")
        means.setflags(write=False)
        object.__setattr__(self, "_means", means)

    @property
    def n(self) -> int:
        return self.points.shape[0]

    @property
    def d(self) -> int:
        return self.points.shape[1]

    @property
    def shape(self) -> tuple[int, ...]:
        """Cluster sizes ``(|C_1|, ..., |C_k|)``."""
        return tuple(int(c) for c in np.bincount(self.labels, minlength=self.k))

    def cluster(self, i: int) -> np.ndarray:
        return self.points[self.labels == i]

    def cluster_means(self) -> np.ndarray:
        return self._means

    def __eq__(self, other):
        if not isinstance(other, Dataset):
            return NotImplemented
        return (
            self.k == other.k
            and np.array_equal(self.points, other.points)
            and np.array_equal(self.labels, other.labels)
        )

    __hash__ = None


@dataclass(frozen=True)
class SiteSet:
    """k pairwise distinct sites in R^d."""

    sites: np.ndarray

    def __post_init__(self):
        sites = _as_matrix(self.sites, "sites")
        if len(sites) < 2:
            raise GeometryError("need at least two sites")
        if _min_pair_distance(sites) <= TAU_SITE:
            raise GeometryError("sites are not pairwise distinct")
        object.__setattr__(self, "sites", sites)

    @classmethod
    def means_of(cls, data: Dataset) -> "SiteSet":
        return cls(data.cluster_means())

    @property
    def k(self) -> int:
        return self.sites.shape[0]

    @property
    def d(self) -> int:
        return self.sites.shape[1]

    def __len__(self):
        return self.k

    def __getitem__(self, i):
        return self.sites[i]

    def scaled(self, factor: float) -> "SiteSet":
        return SiteSet(self.sites * factor)


def pair_direction(sites: SiteSet, i: int, j: int) -> tuple[np.ndarray, float]:
    """Unit vector from site ``i`` towards site ``j`` and their distance."""
    if i == j:
        raise GeometryError("degenerate site pair: i == j")
    diff = sites[j] - sites[i]
    dist = float(np.linalg.norm(diff))
    if dist <= TAU_SITE:
        raise GeometryError(f"degenerate site pair ({i}, {j})")
    return diff / dist, dist


def pair_tables(sites: SiteSet) -> tuple[np.ndarray, np.ndarray]:
    """All unit directions ``u[i, j]`` (shape k, k, d) and distances ``dist[i, j]``.

    Diagonal entries are zero directions with distance 1 so that callers can
    divide without special-casing.
    """
    s = sites.sites
    diff = s[None, :, :] - s[:, None, :]
    dist = np.sqrt((diff**2).sum(axis=2))
    np.fill_diagonal(dist, 1.0)
    return diff / dist[:, :, None], dist


def gamma_from_weights(sites: SiteSet, weights) -> np.ndarray:
    w = np.asarray(weights, dtype=float)
    return 0.5 * ((sites.sites**2).sum(axis=1) - w)


def weights_from_gamma(sites: SiteSet, gamma) -> np.ndarray:
    g = np.asarray(gamma, dtype=float)
    return (sites.sites**2).sum(axis=1) - 2.0 * g


@dataclass(frozen=True)
class PowerDiagram:
    """Power diagram in ``(S, gamma)`` form.

    ``gamma`` is stored as given. Solvers in this package produce it with
    ``gamma[0] == 0``; :meth:`normalized` shifts an arbitrary vector there.
    """

    sites: SiteSet
    gamma: np.ndarray

    def __post_init__(self):
        if not isinstance(self.sites, SiteSet):
            object.__setattr__(self, "sites", SiteSet(self.sites))
        g = np.array(self.gamma, dtype=float).reshape(-1)
        if len(g) != self.sites.k:
            raise GeometryError(f"gamma has length {len(g)}, expected {self.sites.k}")
        if not np.all(np.isfinite(g)):
            raise GeometryError("gamma contains non-finite values")
        g.setflags(write=False)
        object.__setattr__(self, "gamma", g)

    @classmethod
    def from_weights(cls, sites: SiteSet, weights) -> "PowerDiagram":
        return cls(sites, gamma_from_weights(sites, weights))

    @property
    def k(self) -> int:
        return self.sites.k

    @property
    def d(self) -> int:
        return self.sites.d

    @property
    def weights(self) -> np.ndarray:
        return weights_from_gamma(self.sites, self.gamma)

    def normalized(self) -> "PowerDiagram":
        return PowerDiagram(self.sites, self.gamma - self.gamma[0])

    def gamma_pair(self, i: int, j: int) -> float:
        """Signed offset ``(gamma_j - gamma_i) / ||s_j - s_i||`` of the i/j hyperplane."""
        _, dist = pair_direction(self.sites, i, j)
        return float((self.gamma[j] - self.gamma[i]) / dist)

    def power(self, x) -> np.ndarray:
        """Power function values ``||s_i - x||^2 - w_i`` for every site."""
        x = np.asarray(x, dtype=float)
        return ((self.sites.sites - x) ** 2).sum(axis=1) - self.weights

    def classify(self, x) -> int | np.ndarray:
        """Index of the cell containing ``x``; ties go to the smallest index.

        Accepts a single point (returns int) or an ``(m, d)`` array.
        """
        x = np.asarray(x, dtype=float)
        single = x.ndim <= 1
        pts = x.reshape(1, -1) if single else x
        if pts.shape[1] != self.d:
            raise GeometryError(f"point dimension {pts.shape[1]} != {self.d}")
        scores = self.gamma[None, :] - pts @ self.sites.sites.T
        # argmin returns the first minimum, which is the tie rule we want
        idx = np.argmin(scores, axis=1)
        return int(idx[0]) if single else idx


def slack_table(diagram: PowerDiagram, data: Dataset) -> np.ndarray:
    """Normalized slacks ``gamma_ij - s_ij^T x_l`` for every point and foreign cluster.

    Returns an ``(n, k)`` array; the entry for a point's own cluster is +inf.
    """
    if diagram.k != data.k or diagram.d != data.d:
        raise GeometryError("diagram and dataset disagree on k or d")
    unit, dist = pair_tables(diagram.sites)
    g = diagram.gamma
    gpair = (g[None, :] - g[:, None]) / dist
    own = data.labels
    proj = np.einsum("ljd,ld->lj", unit[own], data.points)
    slack = gpair[own] - proj
    slack[np.arange(data.n), own] = np.inf
    return slack


def margin_of(diagram: PowerDiagram, data: Dataset) -> float:
    """Largest eps such that every point keeps distance eps from its cell walls."""
    return float(slack_table(diagram, data).min())


class Separation(str, enum.Enum):
    STRICT = "strictly_separating"
    SEPARATING = "separating"
    NONE = "not_separating"


def verify_separating(diagram: PowerDiagram, data: Dataset, tol: float = TAU_NUM) -> Separation:
    slack = slack_table(diagram, data)
    margin = float(slack.min())
    if margin > tol:
        return Separation.STRICT
    if margin < -tol:
        return Separation.NONE
    # every cluster must reach strictly into its own cell against each neighbour,
    # otherwise it lies wholly on a shared wall
    for i in range(data.k):
        members = slack[data.labels == i]
        for j in range(data.k):
            if j != i and not np.any(members[:, j] > tol):
                return Separation.NONE
    return Separation.SEPARATING


class Variant(str, enum.Enum):
    MME = "mme"
    MEP = "mep"


@dataclass(frozen=True)
class SoftSolution:
    """Soft power diagram ``(S, gamma, eps, xi)``.

    ``xi`` is an ``(n, k)`` table for MME (own-cluster entries are 0) and a
    length-n vector for MEP.
    """

    diagram: PowerDiagram
    epsilon: float
    xi: np.ndarray
    variant: Variant

    def __post_init__(self):
        object.__setattr__(self, "variant", Variant(self.variant))
        xi = np.array(self.xi, dtype=float)
        xi.setflags(write=False)
        object.__setattr__(self, "xi", xi)

    def check(self, data: Dataset, tol: float = TAU_NUM) -> None:
        """Raise if the stored values violate the soft separation constraints."""
        if np.any(self.xi < -tol):
            raise GeometryError("negative slack variable")
        slack = slack_table(self.diagram, data) - self.epsilon
        if self.variant is Variant.MEP:
            allowed = self.xi[:, None]
        else:
            allowed = self.xi
        viol = -(slack + allowed)
        viol[np.arange(data.n), data.labels] = -np.inf
        if viol.max() > tol:
            raise GeometryError(f"soft constraint violated by {viol.max():.3g}")


@dataclass(frozen=True)
class ErrorSets:
    """Margin errors and support vectors of a soft solution.

    For MME the entries are ``(point, cluster)`` pairs; for MEP they are point
    indices.
    """

    margin_errors: tuple
    support_vectors: tuple


def extract_errors(sol: SoftSolution, data: Dataset, tol: float = TAU_NUM) -> ErrorSets:
    slack = slack_table(sol.diagram, data) - sol.epsilon
    if sol.variant is Variant.MME:
        err = np.argwhere(slack < -tol)
        sv = np.argwhere(slack <= tol)
        return ErrorSets(
            tuple((int(l), int(j)) for l, j in err),
            tuple((int(l), int(j)) for l, j in sv),
        )
    worst = slack.min(axis=1)
    return ErrorSets(
        tuple(int(l) for l in np.flatnonzero(worst < -tol)),
        tuple(int(l) for l in np.flatnonzero(worst <= tol)),
    )


def dataset_from_clusters(clusters: Sequence[Sequence]) -> Dataset:
    """Build a dataset from a list of per-cluster point lists."""
    pts, labels = [], []
    for i, members in enumerate(clusters):
        for x in members:
            pts.append(np.atleast_1d(np.asarray(x, dtype=float)))
            labels.append(i)
    return Dataset(np.array(pts), np.array(labels), k=len(clusters))
