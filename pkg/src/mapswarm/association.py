"""MSD-to-MAP matching and Lloyd clustering of MSD positions."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from sklearn.base import BaseEstimator, ClusterMixin
from sklearn.utils.validation import check_is_fitted

from .validation import check_point, check_points, check_positive

UNMATCHED = -1


@dataclass(frozen=True)
class Matching:
    """Outcome of one matching round.

    ``aspirant_of[i]`` is the index (into the MAP array that was matched
    against) of the nearest in-range MAP of MSD ``i``, or ``UNMATCHED``.
    """

    aspirant_of: np.ndarray
    served: np.ndarray
    aspirants_per_map: np.ndarray
    served_per_map: np.ndarray

    @property
    def n_served(self) -> int:
        return int(self.served.sum())


def _pairwise_sq(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    dx = np.subtract.outer(a[:, 0], b[:, 0])
    dx *= dx
    dy = np.subtract.outer(a[:, 1], b[:, 1])
    dy *= dy
    dx += dy
    return dx


def match_msds(msd_positions, map_positions, r: float, n_max: int) -> Matching:
    """Greedy nearest-MAP association with a per-MAP serving capacity.

    Each MSD aspires to its nearest MAP strictly within ground distance ``r``
    (lowest MAP index on ties). Each MAP serves its ``n_max`` closest aspirants
    (lowest MSD index on ties); the rest stay unserved. There is no fallback
    to a farther MAP.
    """
    r = check_positive(r, "r")
    n_max = check_positive(n_max, "n_max", integer=True)
    y = check_points(msd_positions, "msd_positions")
    q = check_points(map_positions, "map_positions")
    m, n_maps = len(y), len(q)

    aspirant_of = np.full(m, UNMATCHED, dtype=np.int64)
    served = np.zeros(m, dtype=bool)
    if m == 0 or n_maps == 0:
        zeros = np.zeros(n_maps, dtype=np.int64)
        return Matching(aspirant_of, served, zeros, zeros.copy())

    d2 = _pairwise_sq(y, q)
    nearest = np.argmin(d2, axis=1)
    best = d2[np.arange(m), nearest]
    in_range = best < r * r
    aspirant_of[in_range] = nearest[in_range]

    idx = np.flatnonzero(in_range)
    # sort by (map, distance, msd id); lexsort keys are last-major
    order = idx[np.lexsort((idx, best[idx], nearest[idx]))]
    owners = nearest[order]
    counts = np.bincount(owners, minlength=n_maps)
    starts = np.concatenate(([0], np.cumsum(counts)[:-1]))
    rank = np.arange(len(order)) - starts[owners]
    served[order[rank < n_max]] = True

    return Matching(
        aspirant_of=aspirant_of,
        served=served,
        aspirants_per_map=counts.astype(np.int64),
        served_per_map=np.minimum(counts, n_max).astype(np.int64),
    )


def coverage_proportion(matching: Matching, m: int) -> float:
    m = check_positive(m, "m", integer=True)
    return matching.n_served / m


class CoverageMatcher(BaseEstimator):
    """Estimator wrapper around :func:`match_msds`.

    ``fit`` takes the MAP positions; ``predict`` returns each MSD's aspirant
    MAP index (``-1`` if out of range) and ``match`` the full :class:`Matching`.
    """

    def __init__(self, r=24.0, n_max=80):
        self.r = r
        self.n_max = n_max

    def fit(self, X, y=None):
        self.map_positions_ = check_points(X, "map_positions")
        self.n_maps_ = len(self.map_positions_)
        return self

    def match(self, X) -> Matching:
        check_is_fitted(self, "map_positions_")
        return match_msds(X, self.map_positions_, self.r, self.n_max)

    def predict(self, X):
        return self.match(X).aspirant_of

    def score(self, X, y=None):
        """Fraction of the MSDs in ``X`` that are served."""
        X = check_points(X, "msd_positions", allow_empty=False)
        return coverage_proportion(self.match(X), len(X))


@dataclass(frozen=True)
class ClusterSet:
    centers: np.ndarray
    assignment: np.ndarray
    objective: float


def _assign(X: np.ndarray, centers: np.ndarray):
    d2 = _pairwise_sq(X, centers)
    labels = np.argmin(d2, axis=1)
    return labels, d2[np.arange(len(X)), labels]


class LloydKMeans(ClusterMixin, BaseEstimator):
    """Lloyd's k-means with warm starting and deterministic tie-breaking.

    Parameters
    ----------
    n_clusters : int
    max_iter : int
    tol : float
        Stop once no center moves by ``tol`` or more.
    warm_start : bool
        Reuse ``cluster_centers_`` from the previous ``fit`` as the starting
        point instead of sampling new ones.
    random_state : None, int or numpy Generator
        Used only to pick the initial centers (distinct data points).

    Empty clusters are re-seeded at the point farthest from its assigned
    center, so ``n_clusters`` centers are always kept.
    """

    def __init__(self, n_clusters=3, max_iter=100, tol=1e-6, warm_start=False, random_state=None):
        self.n_clusters = n_clusters
        self.max_iter = max_iter
        self.tol = tol
        self.warm_start = warm_start
        self.random_state = random_state

    def _initial_centers(self, X, init):
        k = self.n_clusters
        if init is not None:
            init = check_points(init, "init")
            if len(init) != k:
                raise ValueError(f"init has {len(init)} centers, expected n_clusters={k}")
            return init.copy()
        if self.warm_start and hasattr(self, "cluster_centers_"):
            return self.cluster_centers_.copy()
        if k > len(X):
            raise ValueError(f"n_clusters={k} exceeds the number of points ({len(X)})")
        if not hasattr(self, "_rng"):
            self._rng = np.random.default_rng(self.random_state)
        pick = self._rng.choice(len(X), size=k, replace=False)
        return X[np.sort(pick)].copy()

    def fit(self, X, y=None, init=None):
        X = check_points(X, "X", allow_empty=False)
        check_positive(self.n_clusters, "n_clusters", integer=True)
        max_iter = check_positive(self.max_iter, "max_iter", integer=True)
        tol = check_positive(self.tol, "tol")
        centers = self._initial_centers(X, init)
        k = len(centers)

        path = []
        n_iter = 0
        for n_iter in range(1, max_iter + 1):
            labels, d2 = _assign(X, centers)
            path.append(float(d2.sum()))
            new = centers.copy()
            counts = np.bincount(labels, minlength=k)
            for j in range(k):
                if counts[j]:
                    new[j] = X[labels == j].mean(axis=0)
            empty = np.flatnonzero(counts == 0)
            if len(empty):
                far = d2.copy()
                for j in empty:
                    i = int(np.argmax(far))
                    new[j] = X[i]
                    far[i] = -1.0
            shift = np.sqrt(((new - centers) ** 2).sum(axis=1)).max()
            centers = new
            if shift < tol:
                break

        labels, d2 = _assign(X, centers)
        path.append(float(d2.sum()))
        self.cluster_centers_ = centers
        self.labels_ = labels
        self.inertia_ = float(d2.sum())
        self.inertia_path_ = path
        self.n_iter_ = n_iter
        return self

    def predict(self, X):
        check_is_fitted(self, "cluster_centers_")
        return _assign(check_points(X), self.cluster_centers_)[0]

    def score(self, X, y=None):
        check_is_fitted(self, "cluster_centers_")
        return -float(_assign(check_points(X), self.cluster_centers_)[1].sum())

    def cluster_set(self) -> ClusterSet:
        check_is_fitted(self, "cluster_centers_")
        return ClusterSet(self.cluster_centers_.copy(), self.labels_.copy(), self.inertia_)


def lloyd_cluster(points, k, init_centers=None, max_iter=100, tol=1e-6, rng=None) -> ClusterSet:
    km = LloydKMeans(n_clusters=k, max_iter=max_iter, tol=tol, random_state=rng)
    return km.fit(points, init=init_centers).cluster_set()


def nearest_center(q, centers) -> np.ndarray:
    """Closest center to ``q``; the lowest index wins ties."""
    q = check_point(q)
    centers = check_points(centers, "centers", allow_empty=False)
    d2 = ((centers - q) ** 2).sum(axis=1)
    return centers[int(np.argmin(d2))].copy()
