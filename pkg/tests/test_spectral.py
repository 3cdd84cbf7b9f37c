"""Eigendecomposition, cluster-count estimate, and k-means contracts.

The eigensolver is cross-checked against a self-contained cyclic Jacobi
rotation routine written here, so the two routes share no code.
"""

from __future__ import annotations

import itertools

import numpy as np
import pytest

from passby.graph import SimilarityGraph, knn_graph, laplacian
from passby.spectral import (
    EigensolverError,
    KmeansConfig,
    SpectralEmbedding,
    eigendecompose,
    estimate_k,
    kmeans,
    spectral_cluster,
)


def jacobi_eigh(a, sweeps=30, tol=1e-14):
    """Cyclic Jacobi eigensolver for symmetric matrices (test oracle only)."""
    a = np.array(a, dtype=np.float64)
    n = a.shape[0]
    v = np.eye(n)
    for _ in range(sweeps):
        off = np.sqrt(np.sum(np.tril(a, -1) ** 2))
        if off < tol:
            break
        for p in range(n - 1):
            for q in range(p + 1, n):
                if abs(a[p, q]) < 1e-300:
                    continue
                theta = (a[q, q] - a[p, p]) / (2.0 * a[p, q])
                t = np.sign(theta) / (abs(theta) + np.sqrt(theta * theta + 1.0))
                if theta == 0.0:
                    t = 1.0
                c = 1.0 / np.sqrt(t * t + 1.0)
                s = t * c
                rot = np.eye(n)
                rot[p, p] = rot[q, q] = c
                rot[p, q] = s
                rot[q, p] = -s
                a = rot.T @ a @ rot
                v = v @ rot
    order = np.argsort(np.diag(a), kind="stable")
    return np.diag(a)[order], v[:, order]


def _random_laplacian(rng, n, m=None):
    X = rng.normal(size=(n, 5)) + 2.0
    g = knn_graph(X, neighbors=m or max(2, n // 5))
    return laplacian(g)


def _two_block_graph(sizes=(5, 7), weight=0.8):
    n = sum(sizes)
    w = np.zeros((n, n))
    start = 0
    for size in sizes:
        block = slice(start, start + size)
        w[block, block] = weight
        start += size
    np.fill_diagonal(w, 0.0)
    return SimilarityGraph(weights=w, scales=np.ones(n), neighbors=1)


# ------------------------------------------------------------ eigensolver


def test_jacobi_oracle_on_known_matrix():
    # sanity-check the oracle itself before trusting it elsewhere
    a = np.array([[2.0, 1.0], [1.0, 2.0]])
    vals, vecs = jacobi_eigh(a)
    assert vals == pytest.approx([1.0, 3.0], abs=1e-12)
    assert np.allclose(a @ vecs, vecs * vals, atol=1e-12)


def test_eigendecompose_two_vertex_closed_form():
    lap = laplacian(_two_block_graph(sizes=(2,), weight=0.6))
    emb = eigendecompose(lap, p=2)
    assert emb.eigenvalues == pytest.approx([0.0, 2.0], abs=1e-12)
    r = 1.0 / np.sqrt(2.0)
    assert emb.eigenvectors[:, 0] == pytest.approx([r, r], abs=1e-12)
    # sign rule: the largest-magnitude entry comes out positive
    assert emb.eigenvectors[:, 1] == pytest.approx([r, -r], abs=1e-12)


def test_eigendecompose_matches_jacobi_oracle():
    rng = np.random.default_rng(0)
    for trial in range(8):
        lap = _random_laplacian(rng, int(rng.integers(6, 16)))
        n = lap.matrix.shape[0]
        emb = eigendecompose(lap, p=n)
        ref_vals, ref_vecs = jacobi_eigh(lap.matrix)
        assert np.allclose(emb.eigenvalues, ref_vals, atol=1e-10)
        # compare eigenspaces pairwise where the spectrum is simple
        gaps_ok = np.diff(ref_vals) > 1e-6
        for j in range(n):
            simple = (j == 0 or gaps_ok[j - 1]) and (j == n - 1 or gaps_ok[j])
            if simple:
                assert abs(np.dot(emb.eigenvectors[:, j], ref_vecs[:, j])) == pytest.approx(
                    1.0, abs=1e-8
                )


def test_eigendecompose_ascending_orthonormal_residuals():
    rng = np.random.default_rng(1)
    for trial in range(10):
        lap = _random_laplacian(rng, int(rng.integers(10, 40)))
        p = int(rng.integers(2, lap.matrix.shape[0] + 1))
        emb = eigendecompose(lap, p=p)
        assert emb.p == p
        assert np.all(np.diff(emb.eigenvalues) >= -1e-12)
        gram = emb.eigenvectors.T @ emb.eigenvectors
        assert np.allclose(gram, np.eye(p), atol=1e-10)
        resid = lap.matrix @ emb.eigenvectors - emb.eigenvectors * emb.eigenvalues
        assert np.max(np.linalg.norm(resid, axis=0)) < 1e-8


def test_eigendecompose_sign_convention():
    rng = np.random.default_rng(2)
    for trial in range(10):
        lap = _random_laplacian(rng, 20)
        emb = eigendecompose(lap, p=20)
        for j in range(emb.p):
            col = emb.eigenvectors[:, j]
            assert col[np.argmax(np.abs(col))] > 0.0


def test_eigendecompose_disconnected_zero_multiplicity():
    lap = laplacian(_two_block_graph(sizes=(4, 6)))
    emb = eigendecompose(lap, p=4)
    assert abs(emb.eigenvalues[0]) < 1e-10
    assert abs(emb.eigenvalues[1]) < 1e-10
    assert emb.eigenvalues[2] > 0.1


def test_eigendecompose_p_out_of_range():
    lap = laplacian(_two_block_graph(sizes=(3,)))
    with pytest.raises(ValueError):
        eigendecompose(lap, p=4)
    with pytest.raises(ValueError):
        eigendecompose(lap, p=0)


def test_embedding_rejects_descending_values():
    with pytest.raises(ValueError):
        SpectralEmbedding(eigenvalues=np.array([1.0, 0.5]), eigenvectors=np.eye(2))


# ------------------------------------------------------------- estimate_k


def test_estimate_k_examples():
    vals = np.array([0.0, 0.01, 0.02, 0.5, 0.51])
    # candidate gaps: k=2 -> 0.01, k=3 -> 0.48, k=4 -> 0.01
    assert estimate_k(vals, k_max=4) == 3
    assert estimate_k(np.array([0.0, 1.0, 1.0, 1.0, 1.0]), k_max=4) == 2


def test_estimate_k_tie_prefers_smaller():
    # quarter steps are exactly representable, so every gap ties at 0.25
    vals = np.array([0.0, 0.25, 0.5, 0.75, 1.0])
    assert estimate_k(vals, k_max=4) == 2


def test_estimate_k_matches_brute_force():
    rng = np.random.default_rng(3)
    for trial in range(200):
        k_max = int(rng.integers(2, 7))
        vals = np.sort(np.round(rng.uniform(0.0, 2.0, size=k_max + 1), 1))
        best_k, best_gap = None, -1.0
        for k in range(2, k_max + 1):
            gap = vals[k] - vals[k - 1]
            if gap > best_gap:  # strict: ties keep the earlier k
                best_k, best_gap = k, gap
        assert estimate_k(vals, k_max=k_max) == best_k


def test_estimate_k_needs_enough_values():
    with pytest.raises(ValueError):
        estimate_k(np.array([0.0, 0.5]), k_max=2)  # needs k_max + 1 values
    with pytest.raises(ValueError):
        estimate_k(np.array([0.0, 0.5, 1.0]), k_max=1)


# ---------------------------------------------------------------- k-means


def exhaustive_two_means(points):
    """Globally optimal 2-cluster WCSS by enumerating all splits (oracle)."""
    n = points.shape[0]
    best = np.inf
    for bits in range(1, 2 ** (n - 1)):  # fix point 0 in cluster 0
        mask = np.array([(bits >> i) & 1 for i in range(n)], dtype=bool)
        wcss = 0.0
        for side in (mask, ~mask):
            group = points[side]
            wcss += ((group - group.mean(axis=0)) ** 2).sum()
        best = min(best, wcss)
    return best


def test_kmeans_two_separated_pairs():
    pts = np.array([[0.0], [0.1], [10.0], [10.1]])
    res = kmeans(pts, k=2, cfg=KmeansConfig(seed=0))
    assert res.partition.as_sets() == {frozenset({0, 1}), frozenset({2, 3})}
    assert res.wcss == pytest.approx(0.01)
    assert sorted(res.centroids.ravel()) == pytest.approx([0.05, 10.05])
    assert not res.degenerate


def test_kmeans_k_equals_n_zero_wcss():
    pts = np.array([[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]])
    res = kmeans(pts, k=3, cfg=KmeansConfig(seed=1))
    assert res.wcss == pytest.approx(0.0, abs=1e-15)
    assert res.partition.sizes().tolist() == [1, 1, 1]


def test_kmeans_single_cluster_is_mean():
    rng = np.random.default_rng(4)
    pts = rng.normal(size=(20, 3))
    res = kmeans(pts, k=1, cfg=KmeansConfig(seed=2))
    assert np.allclose(res.centroids[0], pts.mean(axis=0), atol=1e-12)
    assert res.wcss == pytest.approx(((pts - pts.mean(axis=0)) ** 2).sum())


def test_kmeans_matches_exhaustive_oracle():
    rng = np.random.default_rng(5)
    hits = 0
    for trial in range(40):
        n = int(rng.integers(4, 9))
        pts = rng.normal(size=(n, int(rng.integers(1, 4))))
        res = kmeans(pts, k=2, cfg=KmeansConfig(seed=int(rng.integers(10_000))))
        best = exhaustive_two_means(pts)
        assert res.wcss >= best - 1e-12  # can never beat the global optimum
        if res.wcss <= best + 1e-9:
            hits += 1
    assert hits >= 38  # 20 restarts make misses rare


def test_kmeans_wcss_history_non_increasing():
    rng = np.random.default_rng(6)
    pts = rng.normal(size=(60, 4))
    res = kmeans(pts, k=4, cfg=KmeansConfig(seed=3))
    hist = np.array(res.wcss_history)
    assert np.all(np.diff(hist) <= 1e-12)
    assert hist[-1] == pytest.approx(res.wcss)
    assert res.iterations == len(hist)


def test_kmeans_deterministic():
    rng = np.random.default_rng(7)
    pts = rng.normal(size=(50, 3))
    a = kmeans(pts, k=3, cfg=KmeansConfig(seed=11))
    b = kmeans(pts, k=3, cfg=KmeansConfig(seed=11))
    assert np.array_equal(a.partition.labels, b.partition.labels)
    assert a.wcss == b.wcss and a.restart_index == b.restart_index
    c = kmeans(pts, k=3, cfg=KmeansConfig(seed=12))
    assert isinstance(c.restart_index, int)  # other seeds still run fine


def test_kmeans_no_empty_clusters():
    rng = np.random.default_rng(8)
    for trial in range(20):
        pts = rng.normal(size=(int(rng.integers(6, 30)), 2))
        k = int(rng.integers(2, 6))
        res = kmeans(pts, k=k, cfg=KmeansConfig(seed=trial))
        assert res.partition.k == k
        assert np.all(res.partition.sizes() > 0)


def test_kmeans_degenerate_flag_on_identical_points():
    pts = np.ones((5, 2))
    res = kmeans(pts, k=2, cfg=KmeansConfig(seed=9))
    assert res.degenerate
    assert res.wcss == pytest.approx(0.0, abs=1e-15)


def test_kmeans_k_out_of_range():
    pts = np.zeros((3, 2))
    with pytest.raises(ValueError):
        kmeans(pts, k=0)
    with pytest.raises(ValueError):
        kmeans(pts, k=4)


# -------------------------------------------------------- spectral_cluster


def _embed(g, p):
    return eigendecompose(laplacian(g), p=p)


def test_spectral_cluster_two_components_exact():
    emb = _embed(_two_block_graph(sizes=(6, 9)), p=4)
    res = spectral_cluster(emb, k=2, cfg=KmeansConfig(seed=0))
    assert res.partition.as_sets() == {frozenset(range(6)), frozenset(range(6, 15))}


def test_spectral_cluster_three_components_exact():
    emb = _embed(_two_block_graph(sizes=(5, 6, 7)), p=5)
    res = spectral_cluster(emb, k=3, cfg=KmeansConfig(seed=1))
    assert res.partition.as_sets() == {
        frozenset(range(5)),
        frozenset(range(5, 11)),
        frozenset(range(11, 18)),
    }


def test_spectral_cluster_single_column_variant():
    emb = _embed(_two_block_graph(sizes=(6, 9)), p=4)
    res = spectral_cluster(emb, k=2, columns=[1], cfg=KmeansConfig(seed=2))
    assert res.partition.as_sets() == {frozenset(range(6)), frozenset(range(6, 15))}


def test_spectral_cluster_row_normalize_runs():
    rng = np.random.default_rng(9)
    g = knn_graph(rng.normal(size=(30, 4)) + 2.0, neighbors=5)
    res = spectral_cluster(_embed(g, p=6), k=3, row_normalize=True, cfg=KmeansConfig(seed=3))
    assert res.partition.labels.shape == (30,)
    assert np.all(res.partition.sizes() > 0)


def test_spectral_cluster_column_out_of_range():
    emb = _embed(_two_block_graph(sizes=(4, 4)), p=3)
    with pytest.raises(ValueError):
        spectral_cluster(emb, k=2, columns=[8])


def test_partition_rejects_bad_labels():
    from passby.spectral import Partition

    with pytest.raises(ValueError):
        Partition(labels=np.array([0, 1, 3]), k=3)  # label outside [0, k)
