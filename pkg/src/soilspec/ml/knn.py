"""K-nearest-neighbor classifier and regressor with deterministic tie-breaks.

Distances are Euclidean. Neighbor ranking sorts by (distance, training row
index), so duplicated points resolve reproducibly; vote ties go to the
smallest class index. Queries are processed in chunks to bound memory.
"""

from __future__ import annotations

import hashlib
from concurrent.futures import ThreadPoolExecutor

import numpy as np

from ..errors import EmptyTrainingSet, KTooLarge

# Query chunks are sized so the (chunk, n_train, n_features) difference
# tensor stays near this budget.
_CHUNK_BYTES = 48 * 1024 * 1024


class _KnnBase:
    def __init__(self, k: int = 5, n_jobs: int = 1):
        if k < 1:
            raise KTooLarge(f"k must be >= 1, got {k}")
        self.k = k
        self.n_jobs = max(1, n_jobs)
        self.train_x: np.ndarray | None = None
        self.train_y: np.ndarray | None = None

    def fit(self, features: np.ndarray, targets: np.ndarray):
        features = np.ascontiguousarray(features, dtype=np.float64)
        if features.ndim != 2 or features.shape[0] == 0:
            raise EmptyTrainingSet("KNN fitted with no training rows")
        if self.k > features.shape[0]:
            raise KTooLarge(f"k={self.k} exceeds {features.shape[0]} training rows")
        self.train_x = features
        self.train_y = np.asarray(targets)
        return self

    def _neighbor_indices(self, queries: np.ndarray) -> np.ndarray:
        """(n_queries, k) training-row indices, nearest first.

        Ranking is exact: sort key is (squared distance, training index).
        A partition finds the k-th order statistic, then every row at or
        below it is re-sorted stably so ties resolve by index, matching a
        full linear-scan ranking.
        """
        if self.train_x is None:
            raise EmptyTrainingSet("KNN predict before fit")
        queries = np.ascontiguousarray(queries, dtype=np.float64)
        n_train, dim = self.train_x.shape
        chunk = max(1, _CHUNK_BYTES // (n_train * dim * 8))
        out = np.empty((queries.shape[0], self.k), dtype=np.int64)

        def rank_chunk(start: int) -> None:
            block = queries[start : start + chunk]
            # Direct differences, not the expanded-dot trick: the stable
            # tie-break needs distances bit-identical to a per-query scan.
            d2 = ((block[:, np.newaxis, :] - self.train_x[np.newaxis, :, :]) ** 2).sum(
                axis=2
            )
            if self.k == n_train:
                out[start : start + block.shape[0]] = np.argsort(
                    d2, axis=1, kind="stable"
                )
                return
            kth = np.partition(d2, self.k - 1, axis=1)[:, self.k - 1]
            # Fast path: when the k-th distance is unique the top-k set is
            # unambiguous; order those k by (distance, index) in one shot.
            part = np.argpartition(d2, self.k - 1, axis=1)[:, : self.k]
            vals = np.take_along_axis(d2, part, axis=1)
            order = np.lexsort((part, vals), axis=1)
            out[start : start + block.shape[0]] = np.take_along_axis(
                part, order, axis=1
            )
            # Boundary ties need the full (distance, index) rank among all
            # candidates at or below the k-th distance.
            ties = np.flatnonzero((d2 == kth[:, np.newaxis]).sum(axis=1) > 1)
            for i in ties:
                candidates = np.flatnonzero(d2[i] <= kth[i])
                ranked = candidates[np.argsort(d2[i, candidates], kind="stable")]
                out[start + i] = ranked[: self.k]

        starts = range(0, queries.shape[0], chunk)
        if self.n_jobs > 1:
            # chunks write disjoint slices, so results do not depend on
            # scheduling
            with ThreadPoolExecutor(max_workers=self.n_jobs) as pool:
                list(pool.map(rank_chunk, starts))
        else:
            for start in starts:
                rank_chunk(start)
        return out

    def params_digest(self) -> str:
        """Hash of everything the fit depends on (leakage audits)."""
        h = hashlib.sha256()
        h.update(str(self.k).encode())
        assert self.train_x is not None and self.train_y is not None
        h.update(np.ascontiguousarray(self.train_x).tobytes())
        h.update(np.ascontiguousarray(self.train_y, dtype=np.float64).tobytes())
        return h.hexdigest()


class KnnClassifier(_KnnBase):
    """Majority vote over the k nearest neighbors (integer class labels)."""

    def fit(self, features: np.ndarray, labels: np.ndarray):
        super().fit(features, np.asarray(labels, dtype=np.int64))
        self._n_classes = int(self.train_y.max()) + 1 if self.train_y.size else 0
        return self

    def predict(self, queries: np.ndarray) -> np.ndarray:
        neighbors = self._neighbor_indices(queries)
        votes = self.train_y[neighbors]  # (n, k)
        counts = np.zeros((votes.shape[0], self._n_classes), dtype=np.int64)
        for j in range(votes.shape[1]):
            counts[np.arange(votes.shape[0]), votes[:, j]] += 1
        return counts.argmax(axis=1)  # argmax takes the smallest index on ties


class KnnRegressor(_KnnBase):
    """Unweighted mean of the k nearest neighbors' target vectors."""

    def fit(self, features: np.ndarray, targets: np.ndarray):
        return super().fit(features, np.asarray(targets, dtype=np.float64))

    def predict(self, queries: np.ndarray) -> np.ndarray:
        neighbors = self._neighbor_indices(queries)
        return self.train_y[neighbors].mean(axis=1)
