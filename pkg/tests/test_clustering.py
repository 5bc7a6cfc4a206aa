import numpy as np
import pytest

from vidgeo.clustering import (
    NOISE,
    DbscanParams,
    canonicalize_labels,
    dbscan,
    winning_cluster,
)
from vidgeo.errors import InvalidArgumentError


def oracle_dbscan(points, eps, min_pts):
    """Independent reference: exhaustive region queries + union-find over cores.

    Clusters are ordered by their smallest core index; border points attach to
    the first cluster (in that order) owning a core within eps, matching the
    deterministic scan-order contract of the implementation.
    """
    pts = np.asarray(points, dtype=np.float64)
    n = len(pts)
    d2 = ((pts[:, None, :] - pts[None, :, :]) ** 2).sum(axis=2)
    nb = d2 <= eps * eps
    core = nb.sum(axis=1) >= min_pts

    parent = list(range(n))

    def find(a):
        while parent[a] != a:
            parent[a] = parent[parent[a]]
            a = parent[a]
        return a

    for i in range(n):
        for j in range(n):
            if core[i] and core[j] and nb[i, j]:
                parent[find(i)] = find(j)

    roots = {}
    labels = np.full(n, NOISE, dtype=np.int64)
    for i in range(n):  # cluster ids in order of smallest core index
        if core[i]:
            root = find(i)
            if root not in roots:
                roots[root] = len(roots)
            labels[i] = roots[root]
    for i in range(n):
        if core[i]:
            continue
        reachable = sorted(labels[j] for j in range(n) if core[j] and nb[i, j])
        if reachable:
            labels[i] = reachable[0]
    return labels


class TestDbscan:
    def test_coincident_blob(self):
        pts = np.zeros((5, 2))
        labels = dbscan(pts, DbscanParams(eps=1.0, min_pts=3))
        assert set(labels) == {0}

    def test_two_distant_points_are_noise(self):
        pts = np.array([[0.0, 0.0], [1000.0, 0.0]])
        labels = dbscan(pts, DbscanParams(eps=10.0, min_pts=2))
        assert list(labels) == [NOISE, NOISE]

    def test_blobs_plus_outliers_match_oracle(self):
        rng = np.random.default_rng(20)
        blob_a = rng.normal([0, 0], 5, size=(30, 2))
        blob_b = rng.normal([500, 500], 5, size=(30, 2))
        outliers = rng.uniform(-2000, 2000, size=(5, 2))
        pts = np.vstack([blob_a, blob_b, outliers])
        params = DbscanParams(eps=30.0, min_pts=3)
        got = canonicalize_labels(dbscan(pts, params))
        want = canonicalize_labels(oracle_dbscan(pts, params.eps, params.min_pts))
        np.testing.assert_array_equal(got, want)

    def test_random_instances_match_oracle(self):
        rng = np.random.default_rng(21)
        for _ in range(40):
            n = int(rng.integers(1, 120))
            pts = rng.uniform(0, 200, size=(n, 2))
            eps = float(rng.uniform(5, 60))
            min_pts = int(rng.integers(1, 6))
            got = canonicalize_labels(dbscan(pts, DbscanParams(eps=eps, min_pts=min_pts)))
            want = canonicalize_labels(oracle_dbscan(pts, eps, min_pts))
            np.testing.assert_array_equal(got, want)

    def test_permutation_invariance_up_to_renumbering(self):
        rng = np.random.default_rng(22)
        pts = rng.uniform(0, 100, size=(60, 2))
        params = DbscanParams(eps=15.0, min_pts=3)
        base = dbscan(pts, params)
        for _ in range(5):
            perm = rng.permutation(len(pts))
            permuted = canonicalize_labels(dbscan(pts[perm], params))
            # map back to original order and compare cluster partitions
            back = np.empty_like(permuted)
            back[perm] = permuted
            np.testing.assert_array_equal(
                canonicalize_labels(back), canonicalize_labels(base)
            )

    def test_members_within_eps_of_some_core(self):
        rng = np.random.default_rng(23)
        pts = rng.uniform(0, 100, size=(80, 2))
        params = DbscanParams(eps=12.0, min_pts=4)
        labels = dbscan(pts, params)
        d = np.sqrt(((pts[:, None] - pts[None, :]) ** 2).sum(axis=2))
        core = (d <= params.eps).sum(axis=1) >= params.min_pts
        for i, lab in enumerate(labels):
            if lab == NOISE:
                continue
            assert any(
                core[j] and labels[j] == lab and d[i, j] <= params.eps
                for j in range(len(pts))
            )

    def test_empty_input(self):
        assert len(dbscan([], DbscanParams())) == 0

    def test_param_validation(self):
        with pytest.raises(InvalidArgumentError):
            DbscanParams(eps=0.0)
        with pytest.raises(InvalidArgumentError):
            DbscanParams(min_pts=0)


class TestWinningCluster:
    def test_majority_population(self):
        labels = np.array([0] * 7 + [1] * 3)
        assert winning_cluster(labels) == 0

    def test_all_noise(self):
        assert winning_cluster(np.array([NOISE, NOISE])) is None

    def test_weight_dominance(self):
        labels = np.array([0, 0, 1, 1])
        weights = [1.0, 1.0, 0.6, 0.6]
        assert winning_cluster(labels, weights) == 0

    def test_tie_breaks_to_smallest_id(self):
        labels = np.array([0, 0, 1, 1])
        assert winning_cluster(labels) == 0

    def test_length_mismatch(self):
        with pytest.raises(InvalidArgumentError):
            winning_cluster(np.array([0, 1]), [1.0])
