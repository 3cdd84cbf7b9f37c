"""Clustering by incremental reseeding on a similarity graph.

Each round plants a few seeds per cluster on that cluster's current members,
grows the seed mass by random-walk diffusion until every vertex holds some,
and harvests new labels by majority mass.  The seed budget ramps up linearly
with the round number, so early rounds explore and late rounds consolidate.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import numpy.typing as npt

from .graph import SimilarityGraph
from .spectral import Partition

SeedMatrix = npt.NDArray[np.float64]  # (n, k); column c = mass planted for cluster c


@dataclass(frozen=True)
class IncresConfig:
    k: int
    iterations: int = 200
    seed_rate: float = 0.1
    rng_seed: int = 0
    grow_cap: int | None = None  # None: 10 * n at run time

    def __post_init__(self) -> None:
        if self.k < 2:
            raise ValueError("k must be at least 2")
        if self.iterations < 1:
            raise ValueError("iterations must be positive")
        if self.seed_rate <= 0.0:
            raise ValueError("seed_rate must be positive")
        if self.grow_cap is not None and self.grow_cap < 1:
            raise ValueError("grow_cap must be positive")


@dataclass(frozen=True)
class IncresResult:
    partition: Partition
    seed_mass: SeedMatrix  # final diffused mass, one column per cluster
    grow_steps: tuple[int, ...]  # diffusion steps taken in each round
    cap_exhausted: tuple[bool, ...]  # rounds where the step cap cut diffusion short


def transition_matrix(graph: SimilarityGraph) -> npt.NDArray[np.float64]:
    """Column-stochastic random-walk operator: column j spreads j's mass to its neighbors."""
    deg = graph.degrees()
    return graph.weights / deg[None, :]


def seeds_for_round(seed_rate: float, round_index: int) -> int:
    """Per-cluster seed budget for a 1-based round: max(1, floor(rate * round))."""
    return max(1, int(np.floor(seed_rate * round_index)))


def plant(
    partition: Partition, seeds_per_cluster: int, rng: np.random.Generator
) -> SeedMatrix:
    """Drop seeds on each cluster's members, uniformly with replacement.

    A cluster that currently owns no vertices draws from all vertices instead.
    """
    if seeds_per_cluster < 1:
        raise ValueError("seeds_per_cluster must be positive")
    n = partition.n_points
    mass = np.zeros((n, partition.k))
    everyone = np.arange(n)
    for c in range(partition.k):
        pool = np.flatnonzero(partition.labels == c)
        if pool.size == 0:
            pool = everyone
        picks = pool[rng.integers(0, pool.size, size=seeds_per_cluster)]
        np.add.at(mass, (picks, c), 1.0)
    return mass


def grow(
    seed_mass: SeedMatrix, transition: npt.NDArray[np.float64], cap: int
) -> tuple[SeedMatrix, int, bool]:
    """Diffuse mass until every vertex holds some, or the step cap is hit.

    Returns (mass, steps taken, cap_exhausted).  Mass already supported
    everywhere comes back unchanged with zero steps.
    """
    if cap < 1:
        raise ValueError("cap must be positive")
    mass = seed_mass
    steps = 0
    while not (mass > 0.0).any(axis=1).all():
        if steps >= cap:
            return mass, steps, True
        mass = transition @ mass
        steps += 1
    return mass, steps, False


def harvest(seed_mass: SeedMatrix, previous_labels: npt.ArrayLike) -> npt.NDArray[np.int64]:
    """Label each vertex by the cluster holding the most mass there.

    Ties resolve toward the smaller cluster index; a vertex the diffusion
    never reached keeps its previous label.
    """
    prev = np.asarray(previous_labels, dtype=np.int64)
    labels = np.argmax(seed_mass, axis=1).astype(np.int64)
    unreached = ~(seed_mass > 0.0).any(axis=1)
    labels[unreached] = prev[unreached]
    return labels


def incres_cluster(graph: SimilarityGraph, cfg: IncresConfig) -> IncresResult:
    """Run the full plant/grow/harvest loop from a uniformly random start."""
    n = graph.n_vertices
    if cfg.k > n:
        raise ValueError(f"k={cfg.k} exceeds the {n} vertices available")
    P = transition_matrix(graph)
    cap = cfg.grow_cap if cfg.grow_cap is not None else 10 * n
    rng = np.random.default_rng(np.random.SeedSequence(cfg.rng_seed))
    labels = rng.integers(0, cfg.k, size=n).astype(np.int64)
    steps_taken: list[int] = []
    capped: list[bool] = []
    mass = np.zeros((n, cfg.k))
    for round_index in range(1, cfg.iterations + 1):
        budget = seeds_for_round(cfg.seed_rate, round_index)
        mass = plant(Partition(labels=labels, k=cfg.k), budget, rng)
        mass, steps, exhausted = grow(mass, P, cap)
        labels = harvest(mass, labels)
        steps_taken.append(steps)
        capped.append(exhausted)
    return IncresResult(
        partition=Partition(labels=labels, k=cfg.k),
        seed_mass=mass,
        grow_steps=tuple(steps_taken),
        cap_exhausted=tuple(capped),
    )


def _canonical_levels(partition: Partition) -> npt.NDArray[np.float64]:
    """Evenly spaced levels in [+1, -1], largest cluster first (ties: smaller id)."""
    k = partition.k
    sizes = partition.sizes()
    order = np.lexsort((np.arange(k), -sizes))
    rank = np.empty(k, dtype=np.int64)
    rank[order] = np.arange(k)
    return 1.0 - 2.0 * rank / (k - 1)


def _margins(result: IncresResult) -> npt.NDArray[np.float64]:
    """Final-harvest confidence per vertex: own-cluster share of its total mass."""
    mass = result.seed_mass
    labels = result.partition.labels
    totals = mass.sum(axis=1)
    own = mass[np.arange(labels.size), labels]
    # a vertex diffusion never reached kept its old label; treat it as certain
    return np.divide(own, totals, out=np.ones_like(totals), where=totals > 0.0)


def embedding_column(result: IncresResult) -> npt.NDArray[np.float64]:
    """One real coordinate per vertex summarizing a j-cluster run.

    j=2: the pure signed indicator (+1 for the canonically first cluster,
    -1 for the other).  j>2: each cluster sits at its canonical level scaled
    by the cluster's mean harvest margin, so coordinates stay constant within
    clusters and distinct across them.
    """
    labels = result.partition.labels
    k = result.partition.k
    levels = _canonical_levels(result.partition)
    if k == 2:
        return levels[labels]
    margins = _margins(result)
    mean_margin = np.array(
        [margins[labels == c].mean() if np.any(labels == c) else 0.0 for c in range(k)]
    )
    return (levels * mean_margin)[labels]


def incres_embedding(
    graph: SimilarityGraph, k: int, cfg: IncresConfig
) -> tuple[npt.NDArray[np.float64], list[IncresResult]]:
    """Stack one embedding column per sub-clustering j = 2..k.

    Column j-2 comes from a full reseeding run with j clusters; sub-run RNG
    streams derive deterministically from cfg.rng_seed.
    """
    if k < 2:
        raise ValueError("k must be at least 2")
    streams = np.random.SeedSequence(cfg.rng_seed).spawn(k - 1)
    columns = []
    results = []
    for j in range(2, k + 1):
        sub = IncresConfig(
            k=j,
            iterations=cfg.iterations,
            seed_rate=cfg.seed_rate,
            rng_seed=int(streams[j - 2].generate_state(1)[0]),
            grow_cap=cfg.grow_cap,
        )
        result = incres_cluster(graph, sub)
        columns.append(embedding_column(result))
        results.append(result)
    return np.column_stack(columns), results
