"""Clustering quality: confusion counts, purity, label alignment, pair agreement."""

from __future__ import annotations

from dataclasses import dataclass
from itertools import permutations
from math import comb

import numpy as np
import numpy.typing as npt

from .signal import LabelSpan
from .spectral import Partition

ALIGN_LIMIT = 8  # alignment is exhaustive over permutations; fine for small k


@dataclass(frozen=True)
class ConfusionMatrix:
    """counts[t, c] = points of true class t landing in cluster c."""

    counts: npt.NDArray[np.int64]
    true_names: tuple[str, ...]

    def __post_init__(self) -> None:
        object.__setattr__(self, "counts", np.asarray(self.counts, dtype=np.int64))
        if self.counts.ndim != 2:
            raise ValueError("counts must be 2-D")
        if np.any(self.counts < 0):
            raise ValueError("counts must be nonnegative")
        if len(self.true_names) != self.counts.shape[0]:
            raise ValueError("one name per true class required")

    @property
    def total(self) -> int:
        return int(self.counts.sum())


def confusion(
    true_labels: npt.ArrayLike,
    partition: Partition,
    true_names: tuple[str, ...] | None = None,
) -> ConfusionMatrix:
    """Cross-tabulate dense true class ids against cluster labels."""
    t = np.asarray(true_labels, dtype=np.int64)
    if t.shape != (partition.n_points,):
        raise ValueError("true_labels and partition must cover the same points")
    if t.size == 0:
        raise ValueError("cannot tabulate an empty labelling")
    if t.min() < 0:
        raise ValueError("true labels must be dense nonnegative integers")
    n_true = int(t.max()) + 1
    counts = np.zeros((n_true, partition.k), dtype=np.int64)
    np.add.at(counts, (t, partition.labels), 1)
    names = tuple(true_names) if true_names is not None else tuple(str(i) for i in range(n_true))
    return ConfusionMatrix(counts=counts, true_names=names)


def purity(cm: ConfusionMatrix) -> float:
    """Fraction of points in their cluster's plurality class."""
    if cm.total == 0:
        raise ValueError("purity of an empty tabulation is undefined")
    return float(cm.counts.max(axis=0).sum()) / cm.total


def align_labels(cm: ConfusionMatrix) -> tuple[int, ...]:
    """Best one-to-one map cluster -> true class, exhaustive over permutations.

    Returns one true-class index per cluster (-1 for clusters left unmatched
    when there are more clusters than classes).  Ties keep the
    lexicographically first assignment.
    """
    n_true, k = cm.counts.shape
    if max(n_true, k) > ALIGN_LIMIT:
        raise ValueError(f"exhaustive alignment supports at most {ALIGN_LIMIT} classes")
    best_score = -1
    best: tuple[int, ...] | None = None
    if k <= n_true:
        for perm in permutations(range(n_true), k):
            score = sum(int(cm.counts[perm[c], c]) for c in range(k))
            if score > best_score:
                best_score = score
                best = perm
        assert best is not None
        return tuple(best)
    for perm in permutations(range(k), n_true):
        score = sum(int(cm.counts[t, perm[t]]) for t in range(n_true))
        if score > best_score:
            best_score = score
            best = perm
    assert best is not None
    assignment = [-1] * k
    for t, c in enumerate(best):
        assignment[c] = t
    return tuple(assignment)


def aligned_matches(cm: ConfusionMatrix) -> int:
    """Points matched by the best alignment; equals total iff partitions agree exactly."""
    assignment = align_labels(cm)
    return sum(int(cm.counts[t, c]) for c, t in enumerate(assignment) if t >= 0)


def rand_index(labels_a: npt.ArrayLike, labels_b: npt.ArrayLike) -> float:
    """Fraction of point pairs on which two labelings agree (together vs apart)."""
    a = np.asarray(labels_a)
    b = np.asarray(labels_b)
    if a.shape != b.shape or a.ndim != 1:
        raise ValueError("labelings must be 1-D and equally long")
    n = a.size
    if n < 2:
        raise ValueError("pair agreement needs at least two points")
    _, a_ids = np.unique(a, return_inverse=True)
    _, b_ids = np.unique(b, return_inverse=True)
    table = np.zeros((a_ids.max() + 1, b_ids.max() + 1), dtype=np.int64)
    np.add.at(table, (a_ids, b_ids), 1)
    same_both = sum(comb(int(x), 2) for x in table.ravel())
    same_a = sum(comb(int(x), 2) for x in table.sum(axis=1))
    same_b = sum(comb(int(x), 2) for x in table.sum(axis=0))
    pairs = comb(n, 2)
    return (pairs + 2 * same_both - same_a - same_b) / pairs


def labels_from_spans(spans: list[LabelSpan], times: npt.ArrayLike) -> list[str]:
    """Label each time by the half-open span [start, end) covering it."""
    out = []
    for t in np.asarray(times, dtype=np.float64):
        for span in spans:
            if span.start_s <= t < span.end_s:
                out.append(span.label)
                break
        else:
            raise ValueError(f"time {t} falls outside every label span")
    return out


def densify(names: list[str]) -> tuple[npt.NDArray[np.int64], tuple[str, ...]]:
    """Map string labels to dense ids ordered by first appearance."""
    seen: dict[str, int] = {}
    ids = []
    for name in names:
        if name not in seen:
            seen[name] = len(seen)
        ids.append(seen[name])
    return np.asarray(ids, dtype=np.int64), tuple(seen)
