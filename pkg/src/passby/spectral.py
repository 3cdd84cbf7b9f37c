"""Spectral embeddings of graph Laplacians, eigengap model selection, and k-means."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import numpy.typing as npt

from .graph import Laplacian

RESIDUAL_TOL = 1e-8


class EigensolverError(RuntimeError):
    """The eigensolver failed to converge or left residuals above tolerance."""


@dataclass(frozen=True)
class SpectralEmbedding:
    """The p smallest eigenpairs of a Laplacian, eigenvalues ascending."""

    eigenvalues: npt.NDArray[np.float64]
    eigenvectors: npt.NDArray[np.float64]

    def __post_init__(self) -> None:
        object.__setattr__(self, "eigenvalues", np.asarray(self.eigenvalues, dtype=np.float64))
        object.__setattr__(self, "eigenvectors", np.asarray(self.eigenvectors, dtype=np.float64))
        vals, vecs = self.eigenvalues, self.eigenvectors
        if vals.ndim != 1 or vecs.ndim != 2 or vecs.shape[1] != vals.size:
            raise ValueError("need one eigenvector column per eigenvalue")
        if np.any(np.diff(vals) < 0):
            raise ValueError("eigenvalues must be ascending")

    @property
    def p(self) -> int:
        return self.eigenvalues.size


def eigendecompose(lap: Laplacian, p: int) -> SpectralEmbedding:
    """The p smallest eigenpairs, orthonormal, with a deterministic sign convention.

    Each eigenvector is flipped so its largest-magnitude entry is positive
    (first such entry on ties).  Residuals ||L v - t v|| above 1e-8 fail.
    """
    L = lap.matrix
    n = lap.n_vertices
    if not 1 <= p <= n:
        raise ValueError(f"p must lie in [1, {n}], got {p}")
    try:
        vals, vecs = np.linalg.eigh(L)
    except np.linalg.LinAlgError as exc:
        raise EigensolverError(f"dense symmetric solver failed: {exc}") from exc
    vals = vals[:p].copy()
    vecs = vecs[:, :p].copy()
    for j in range(p):
        lead = int(np.argmax(np.abs(vecs[:, j])))
        if vecs[lead, j] < 0.0:
            vecs[:, j] = -vecs[:, j]
    residuals = np.linalg.norm(L @ vecs - vecs * vals, axis=0)
    bad = np.flatnonzero(residuals >= RESIDUAL_TOL)
    if bad.size:
        raise EigensolverError(
            f"eigenpair {int(bad[0])} residual {residuals[bad[0]]:.3e} exceeds {RESIDUAL_TOL}"
        )
    return SpectralEmbedding(eigenvalues=vals, eigenvectors=vecs)


def estimate_k(eigenvalues: npt.ArrayLike, k_max: int) -> int:
    """Cluster count with the largest eigenvalue gap right after it.

    Scans k in [2, k_max]; the winner maximizes eigenvalue[k+1] - eigenvalue[k]
    (1-based positions), ties resolving toward the smaller k.
    """
    vals = np.asarray(eigenvalues, dtype=np.float64)
    if k_max < 2:
        raise ValueError("k_max must be at least 2")
    if vals.size < k_max + 1:
        raise ValueError(f"need at least {k_max + 1} eigenvalues, got {vals.size}")
    gaps = vals[2 : k_max + 1] - vals[1:k_max]
    return int(np.argmax(gaps)) + 2


@dataclass(frozen=True)
class Partition:
    """Cluster labels in [0, k) for n points."""

    labels: npt.NDArray[np.int64]
    k: int

    def __post_init__(self) -> None:
        object.__setattr__(self, "labels", np.asarray(self.labels, dtype=np.int64))
        if self.labels.ndim != 1:
            raise ValueError("labels must be one-dimensional")
        if self.k < 1:
            raise ValueError("k must be positive")
        if self.labels.size and (self.labels.min() < 0 or self.labels.max() >= self.k):
            raise ValueError("labels must lie in [0, k)")

    @property
    def n_points(self) -> int:
        return self.labels.size

    def sizes(self) -> npt.NDArray[np.int64]:
        return np.bincount(self.labels, minlength=self.k)

    def as_sets(self) -> frozenset[frozenset[int]]:
        """Label-free view for comparisons up to relabeling."""
        groups: dict[int, list[int]] = {}
        for i, c in enumerate(self.labels):
            groups.setdefault(int(c), []).append(i)
        return frozenset(frozenset(g) for g in groups.values())


@dataclass(frozen=True)
class KmeansConfig:
    restarts: int = 20
    max_iter: int = 300
    tol: float = 1e-9
    seed: int = 0

    def __post_init__(self) -> None:
        if self.restarts < 1 or self.max_iter < 1 or self.tol < 0:
            raise ValueError("restarts and max_iter must be positive, tol nonnegative")


@dataclass(frozen=True)
class KmeansResult:
    partition: Partition
    centroids: npt.NDArray[np.float64]
    wcss: float
    iterations: int
    wcss_history: tuple[float, ...]
    restart_index: int
    degenerate: bool


def _plus_plus_seeds(X: np.ndarray, k: int, rng: np.random.Generator) -> np.ndarray:
    """k-means++ seeding: subsequent centers drawn with probability ~ squared distance."""
    n = X.shape[0]
    centroids = np.empty((k, X.shape[1]))
    centroids[0] = X[int(rng.integers(n))]
    d2 = ((X - centroids[0]) ** 2).sum(axis=1)
    for j in range(1, k):
        total = d2.sum()
        if total > 0.0:
            idx = int(rng.choice(n, p=d2 / total))
        else:
            idx = int(rng.integers(n))  # all remaining points sit on chosen centers
        centroids[j] = X[idx]
        np.minimum(d2, ((X - centroids[j]) ** 2).sum(axis=1), out=d2)
    return centroids


def _repair_empty(labels: np.ndarray, d2: np.ndarray, k: int) -> np.ndarray:
    """Hand each empty cluster the point farthest from its own centroid."""
    for c in range(k):
        if not np.any(labels == c):
            own = d2[np.arange(labels.size), labels].copy()
            sizes = np.bincount(labels, minlength=k)
            own[sizes[labels] <= 1] = -np.inf  # singletons must stay put
            labels = labels.copy()
            labels[int(np.argmax(own))] = c
    return labels


def _lloyd(
    X: np.ndarray, k: int, rng: np.random.Generator, max_iter: int, tol: float
) -> tuple[np.ndarray, np.ndarray, float, int, list[float]]:
    centroids = _plus_plus_seeds(X, k, rng)
    prev = np.inf
    history: list[float] = []
    labels = np.zeros(X.shape[0], dtype=np.int64)
    iteration = 0
    for iteration in range(1, max_iter + 1):
        d2 = ((X[:, None, :] - centroids[None, :, :]) ** 2).sum(axis=2)
        labels = np.argmin(d2, axis=1)
        labels = _repair_empty(labels, d2, k)
        centroids = np.stack([X[labels == c].mean(axis=0) for c in range(k)])
        wcss = float(((X - centroids[labels]) ** 2).sum())
        history.append(wcss)
        if np.isfinite(prev) and (prev == 0.0 or (prev - wcss) / prev < tol):
            break
        prev = wcss
    return labels, centroids, history[-1], iteration, history


def kmeans(points: npt.ArrayLike, k: int, cfg: KmeansConfig = KmeansConfig()) -> KmeansResult:
    """Restarted Lloyd iterations; the restart with the least WCSS wins.

    Restart sub-streams derive deterministically from cfg.seed, so the result
    does not depend on execution order; WCSS ties keep the earliest restart.
    """
    X = np.asarray(points, dtype=np.float64)
    if X.ndim == 1:
        X = X[:, None]
    if X.ndim != 2:
        raise ValueError("points must be a 1-D or 2-D array")
    n = X.shape[0]
    if not 1 <= k <= n:
        raise ValueError(f"k must lie in [1, {n}], got {k}")
    degenerate = bool(k > 1 and np.all(X == X[0]))
    best: tuple[float, int, np.ndarray, np.ndarray, int, list[float]] | None = None
    for r, stream in enumerate(np.random.SeedSequence(cfg.seed).spawn(cfg.restarts)):
        rng = np.random.default_rng(stream)
        labels, centroids, wcss, iters, history = _lloyd(X, k, rng, cfg.max_iter, cfg.tol)
        if best is None or wcss < best[0]:
            best = (wcss, r, labels, centroids, iters, history)
    assert best is not None
    wcss, r, labels, centroids, iters, history = best
    return KmeansResult(
        partition=Partition(labels=labels, k=k),
        centroids=centroids,
        wcss=wcss,
        iterations=iters,
        wcss_history=tuple(history),
        restart_index=r,
        degenerate=degenerate,
    )


def spectral_cluster(
    embedding: SpectralEmbedding,
    k: int,
    cfg: KmeansConfig = KmeansConfig(),
    columns: list[int] | None = None,
    row_normalize: bool = False,
) -> KmeansResult:
    """k-means over embedding coordinates.

    Default columns are 1..k-1 (0-based), i.e. the eigenvectors of the 2nd
    through k-th smallest eigenvalues; pass explicit `columns` to cluster on
    a subset such as a single eigenvector.  Row normalization is off by
    default; zero rows are left untouched when it is on.
    """
    if k < 2:
        raise ValueError("k must be at least 2")
    cols = list(range(1, k)) if columns is None else list(columns)
    if not cols:
        raise ValueError("at least one embedding column is required")
    if min(cols) < 0 or max(cols) >= embedding.p:
        raise ValueError(f"columns {cols} outside the embedding's 0..{embedding.p - 1}")
    pts = embedding.eigenvectors[:, cols]
    if row_normalize:
        norms = np.linalg.norm(pts, axis=1, keepdims=True)
        pts = np.divide(pts, norms, out=pts.copy(), where=norms > 0.0)
    return kmeans(pts, k, cfg)
