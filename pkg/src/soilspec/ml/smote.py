"""Minority-class oversampling by segment interpolation (SMOTE).

Every class is brought up to the majority count. Each synthetic point picks
a random base sample of the class and a random one of its k nearest
same-class neighbors, then interpolates uniformly along the segment between
them. Original rows are kept unchanged, synthetics are appended grouped by
ascending class code.
"""

from __future__ import annotations

import numpy as np

from ..errors import ClassTooSmall
from ..seeding import make_rng

_CHUNK_BYTES = 32 * 1024 * 1024


def _class_neighbors(points: np.ndarray, k: int) -> np.ndarray:
    """(n, k) indices of each point's k nearest same-class neighbors.

    Self-matches are excluded by index, not by distance, so duplicated
    points still pick genuine neighbors. Ties: (distance, index); a
    partition finds the k-th order statistic, then candidates at or below
    it are re-sorted stably.
    """
    n, dim = points.shape
    out = np.empty((n, k), dtype=np.int64)
    chunk = max(1, _CHUNK_BYTES // (n * dim * 8))
    for start in range(0, n, chunk):
        block = points[start : start + chunk]
        d2 = ((block[:, np.newaxis, :] - points[np.newaxis, :, :]) ** 2).sum(axis=2)
        rows = np.arange(block.shape[0])
        d2[rows, start + rows] = np.inf  # never choose yourself
        kth = np.partition(d2, k - 1, axis=1)[:, k - 1]
        for i in rows:
            candidates = np.flatnonzero(d2[i] <= kth[i])
            ranked = candidates[np.argsort(d2[i, candidates], kind="stable")]
            out[start + i] = ranked[:k]
    return out


def smote(
    features: np.ndarray,
    labels: np.ndarray,
    k_neighbors: int = 5,
    seed: int = 0,
) -> tuple[np.ndarray, np.ndarray]:
    """Balance all classes up to the majority count.

    Returns (features, labels) with the original rows first. Already
    balanced input comes back identical. Every class needs >= 2 samples.
    """
    features = np.asarray(features, dtype=np.float64)
    labels = np.asarray(labels, dtype=np.int64)
    classes, counts = np.unique(labels, return_counts=True)
    small = classes[counts < 2]
    if small.size:
        raise ClassTooSmall(f"class(es) {small.tolist()} have fewer than 2 samples")
    majority = int(counts.max())
    new_features = [features]
    new_labels = [labels]
    rng = make_rng(seed)
    for cls, count in zip(classes, counts):
        deficit = majority - int(count)
        if deficit == 0:
            continue
        members = np.flatnonzero(labels == cls)
        points = features[members]
        k = min(k_neighbors, points.shape[0] - 1)
        neighbors = _class_neighbors(points, k)
        base = rng.integers(0, points.shape[0], size=deficit)
        pick = rng.integers(0, k, size=deficit)
        delta = rng.uniform(0.0, 1.0, size=deficit)
        partner = neighbors[base, pick]
        synthetic = points[base] + delta[:, np.newaxis] * (
            points[partner] - points[base]
        )
        new_features.append(synthetic)
        new_labels.append(np.full(deficit, cls, dtype=np.int64))
    if len(new_features) == 1:
        return features, labels
    return np.vstack(new_features), np.concatenate(new_labels)
