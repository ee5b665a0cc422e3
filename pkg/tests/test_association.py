import itertools

import numpy as np
import pytest
from sklearn.base import clone

from mapswarm.association import (UNMATCHED, CoverageMatcher, LloydKMeans, coverage_proportion, lloyd_cluster,
                                  match_msds, nearest_center)


def brute_match(y, q, r, n_max):
    """Per-MSD loop over every MAP; independent of the vectorised path."""
    m, n = len(y), len(q)
    asp = [UNMATCHED] * m
    dist = [[float(np.hypot(*(y[i] - q[j]))) for j in range(n)] for i in range(m)]
    for i in range(m):
        best = None
        for j in range(n):
            if dist[i][j] < r and (best is None or dist[i][j] < dist[i][best]):
                best = j
        if best is not None:
            asp[i] = best
    served = [False] * m
    for j in range(n):
        mine = sorted((dist[i][j], i) for i in range(m) if asp[i] == j)
        for _, i in mine[:n_max]:
            served[i] = True
    return asp, served


def test_match_examples():
    mt = match_msds([[5, 0]], [[0, 0]], 24, 80)
    assert mt.aspirant_of.tolist() == [0] and mt.served.tolist() == [True]
    mt = match_msds([[30, 0]], [[0, 0]], 24, 80)
    assert mt.aspirant_of.tolist() == [UNMATCHED] and not mt.served.any()
    mt = match_msds([[1, 0], [2, 0]], [[0, 0]], 24, 1)
    assert mt.aspirants_per_map.tolist() == [2]
    assert mt.served.tolist() == [True, False]
    assert coverage_proportion(mt, 2) == 0.5


def test_match_no_maps_and_no_msds():
    mt = match_msds([[0, 0], [1, 1]], np.zeros((0, 2)), 24, 5)
    assert mt.aspirant_of.tolist() == [UNMATCHED, UNMATCHED]
    assert len(mt.aspirants_per_map) == 0
    mt = match_msds(np.zeros((0, 2)), [[0, 0]], 24, 5)
    assert mt.aspirants_per_map.tolist() == [0]


def test_match_ties():
    # equidistant MAPs -> lowest MAP id; equidistant MSDs at capacity -> lowest MSD id
    mt = match_msds([[0, 0]], [[1, 0], [-1, 0]], 24, 5)
    assert mt.aspirant_of.tolist() == [0]
    mt = match_msds([[0, 1], [0, -1], [1, 0]], [[0, 0]], 24, 2)
    assert mt.served.tolist() == [True, True, False]


def test_match_range_is_strict():
    mt = match_msds([[24, 0]], [[0, 0]], 24, 5)
    assert mt.aspirant_of.tolist() == [UNMATCHED]


def test_match_no_fallback_to_second_nearest():
    mt = match_msds([[1, 0], [2, 0]], [[0, 0], [10, 0]], 24, 1)
    assert mt.aspirant_of.tolist() == [0, 0]
    assert mt.served.tolist() == [True, False]
    assert mt.served_per_map.tolist() == [1, 0]


def test_match_random_against_brute_force(rng):
    for _ in range(60):
        m, n = int(rng.integers(1, 80)), int(rng.integers(1, 8))
        y = rng.uniform(-40, 40, size=(m, 2))
        q = rng.uniform(-40, 40, size=(n, 2))
        r, n_max = rng.uniform(5, 30), int(rng.integers(1, 10))
        mt = match_msds(y, q, r, n_max)
        asp, served = brute_match(y, q, r, n_max)
        assert mt.aspirant_of.tolist() == asp
        assert mt.served.tolist() == served


def test_match_input_validation():
    with pytest.raises(ValueError):
        match_msds([[0, 0]], [[0, 0]], 0, 1)
    with pytest.raises(ValueError):
        match_msds([[0, 0]], [[0, 0]], 24, 0)
    with pytest.raises(ValueError):
        match_msds([[0, 0, 0]], [[0, 0]], 24, 1)


def test_coverage_proportion():
    mt = match_msds([[0, 0]] * 4, [[0, 0]], 24, 80)
    assert coverage_proportion(mt, 4) == 1.0
    assert coverage_proportion(match_msds([[0, 0]], np.zeros((0, 2)), 24, 1), 1) == 0.0
    with pytest.raises(ValueError):
        coverage_proportion(mt, 0)


def test_coverage_matcher_estimator():
    est = CoverageMatcher(r=24, n_max=1)
    assert est.get_params() == {"r": 24, "n_max": 1}
    est.fit([[0, 0]])
    assert est.predict([[1, 0], [2, 0], [50, 0]]).tolist() == [0, 0, UNMATCHED]
    assert est.score([[1, 0], [2, 0]]) == 0.5
    assert clone(est).get_params() == est.get_params()


def brute_kmeans_partition(points, k):
    """Exhaustive search over label vectors (first point fixed to cluster 0)."""
    best = None
    for labels in itertools.product(range(k), repeat=len(points) - 1):
        labels = (0,) + labels
        if len(set(labels)) != k:
            continue
        lab = np.array(labels)
        centers = np.array([points[lab == c].mean(axis=0) for c in range(k)])
        obj = float(((points - centers[lab]) ** 2).sum())
        if best is None or obj < best[0]:
            best = (obj, centers)
    return best


def test_lloyd_k1_is_mean(rng):
    pts = rng.normal(size=(300, 2)) * 7 + 3
    cs = lloyd_cluster(pts, 1, rng=rng)
    np.testing.assert_allclose(cs.centers[0], pts.mean(axis=0), atol=1e-12)


def test_lloyd_two_points():
    cs = lloyd_cluster(np.array([[0.0, 0.0], [2.0, 0.0]]), 2, rng=np.random.default_rng(0))
    assert sorted(map(tuple, cs.centers)) == [(0.0, 0.0), (2.0, 0.0)]
    assert cs.objective == 0.0


def test_lloyd_two_pairs_matches_exhaustive():
    pts = np.array([[0.0, 0.0], [1.0, 0.0], [50.0, 50.0], [50.0, 52.0]])
    obj, centers = brute_kmeans_partition(pts, 2)
    for seed in range(5):
        cs = lloyd_cluster(pts, 2, rng=np.random.default_rng(seed))
        assert cs.objective == pytest.approx(obj, abs=1e-12)
        got = sorted(map(tuple, np.round(cs.centers, 12)))
        assert got == sorted(map(tuple, np.round(centers, 12)))


def test_lloyd_objective_monotone(rng):
    for _ in range(40):
        pts = rng.normal(size=(int(rng.integers(5, 150)), 2)) * rng.uniform(1, 30)
        k = int(rng.integers(1, min(6, len(pts)) + 1))
        km = LloydKMeans(n_clusters=k, random_state=rng).fit(pts)
        assert np.all(np.diff(km.inertia_path_) <= 1e-9)


def test_lloyd_centers_are_means_after_convergence(rng):
    pts = rng.normal(size=(200, 2)) * 10
    km = LloydKMeans(n_clusters=4, tol=1e-10, max_iter=500, random_state=0).fit(pts)
    for j in range(4):
        np.testing.assert_allclose(km.cluster_centers_[j], pts[km.labels_ == j].mean(axis=0), atol=1e-8)
    assert km.inertia_ == pytest.approx(float(((pts - km.cluster_centers_[km.labels_]) ** 2).sum()))


def test_lloyd_empty_cluster_repair():
    pts = np.array([[0.0, 0.0], [1.0, 0.0], [10.0, 0.0]])
    init = np.array([[0.5, 0.0], [100.0, 100.0]])  # second center attracts nobody
    cs = lloyd_cluster(pts, 2, init_centers=init)
    assert sorted(map(tuple, cs.centers)) == [(0.5, 0.0), (10.0, 0.0)]


def test_lloyd_warm_start_reuses_centers(rng):
    pts = rng.normal(size=(100, 2))
    km = LloydKMeans(n_clusters=3, warm_start=True, random_state=1).fit(pts)
    first = km.cluster_centers_.copy()
    km.fit(pts)
    np.testing.assert_array_equal(km.cluster_centers_, first)
    assert km.n_iter_ == 1


def test_lloyd_deterministic(rng):
    pts = rng.normal(size=(150, 2)) * 5
    a = lloyd_cluster(pts, 3, rng=np.random.default_rng(7))
    b = lloyd_cluster(pts, 3, rng=np.random.default_rng(7))
    np.testing.assert_array_equal(a.centers, b.centers)
    np.testing.assert_array_equal(a.assignment, b.assignment)


def test_lloyd_errors():
    with pytest.raises(ValueError, match="exceeds"):
        lloyd_cluster(np.zeros((2, 2)), 3)
    with pytest.raises(ValueError):
        lloyd_cluster(np.zeros((0, 2)), 1)
    with pytest.raises(ValueError):
        LloydKMeans(n_clusters=0).fit(np.zeros((3, 2)))


def test_lloyd_estimator_api(rng):
    pts = rng.normal(size=(60, 2))
    km = LloydKMeans(n_clusters=2, random_state=3)
    labels = km.fit_predict(pts)
    np.testing.assert_array_equal(labels, km.predict(pts))
    assert km.score(pts) == pytest.approx(-km.inertia_)
    assert clone(km).get_params()["n_clusters"] == 2


def test_nearest_center():
    assert nearest_center([3, 3], [[1, 1]]).tolist() == [1, 1]
    assert nearest_center([0, 0], [[1, 0], [-1, 0]]).tolist() == [1, 0]
    assert nearest_center([0, 0], [[1, 0], [5, 0]]).tolist() == [1, 0]
    with pytest.raises(ValueError):
        nearest_center([0, 0], np.zeros((0, 2)))
