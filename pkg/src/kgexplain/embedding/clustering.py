"""
Deterministic seeded k-means over the normalized base entity vectors.
"""
import logging
from dataclasses import dataclass, field
from typing import List

import numpy as np

from kgexplain.config.constants import DEFAULT_CLUSTERS, DEFAULT_SEED, KMEANS_MAX_ITER
from kgexplain.embedding.store import EmbeddingStore, normalize_rows
from kgexplain.errors import ConfigError

logger = logging.getLogger(__name__)


@dataclass
class ClusterModel:
    centroids: np.ndarray
    assignment: np.ndarray
    objective_history: List[float] = field(default_factory=list)
    iterations: int = 0

    @property
    def k(self) -> int:
        return self.centroids.shape[0]

    def cluster_of(self, v: int) -> int:
        return int(self.assignment[v])


def _squared_distances(points: np.ndarray, centroids: np.ndarray) -> np.ndarray:
    diff = points[:, None, :] - centroids[None, :, :]
    return np.einsum("nkd,nkd->nk", diff, diff)


def _objective(points: np.ndarray, centroids: np.ndarray, assignment: np.ndarray) -> float:
    diff = points - centroids[assignment]
    return float(np.einsum("nd,nd->", diff, diff))


def _farthest_point_init(points: np.ndarray, k: int, seed: int) -> np.ndarray:
    rng = np.random.default_rng(seed)
    chosen = [int(rng.integers(points.shape[0]))]
    nearest = _squared_distances(points, points[chosen]).min(axis=1)
    while len(chosen) < k:
        nxt = int(np.argmax(nearest))
        chosen.append(nxt)
        nearest = np.minimum(nearest, _squared_distances(points, points[[nxt]])[:, 0])
    return points[chosen].copy()


def kmeans_points(points: np.ndarray, k: int, seed: int = DEFAULT_SEED, max_iter: int = KMEANS_MAX_ITER) -> ClusterModel:
    """
    Lloyd's k-means with farthest-point seeding.

    Stops when no assignment changes or after max_iter iterations. An empty
    cluster is re-seeded with the point farthest from its current centroid
    (taken from a cluster with more than one member). Ties go to the lowest
    index everywhere.

    Args:
        points: (n, d) data matrix
        k: Number of clusters, 2 <= k <= n
        seed: Seed for the first centroid
        max_iter: Iteration cap

    Returns:
        ClusterModel: Centroids, nearest-centroid assignment, objective per iteration

    Raises:
        ConfigError: If k is out of range
    """
    n = points.shape[0]
    if k < 2 or k > n:
        raise ConfigError(f"Cluster count must be in [2, {n}], got {k}")

    centroids = _farthest_point_init(points, k, seed)
    assignment = np.argmin(_squared_distances(points, centroids), axis=1)
    history = [_objective(points, centroids, assignment)]
    iterations = 0

    for iterations in range(1, max_iter + 1):
        # update step, with re-seeding of empty clusters
        for c in range(k):
            if np.any(assignment == c):
                continue
            counts = np.bincount(assignment, minlength=k)
            own = np.einsum("nd,nd->n", points - centroids[assignment], points - centroids[assignment])
            own[counts[assignment] <= 1] = -1.0
            idx = int(np.argmax(own))
            assignment[idx] = c
            centroids[c] = points[idx]
        for c in range(k):
            centroids[c] = points[assignment == c].mean(axis=0)
        history.append(_objective(points, centroids, assignment))

        new_assignment = np.argmin(_squared_distances(points, centroids), axis=1)
        if np.array_equal(new_assignment, assignment):
            break
        assignment = new_assignment
        history.append(_objective(points, centroids, assignment))

    logger.info(f"k-means (k={k}) finished after {iterations} iteration(s), objective={history[-1]:.6f}")
    return ClusterModel(centroids=centroids, assignment=assignment, objective_history=history, iterations=iterations)


def kmeans_fit(store: EmbeddingStore, k: int = DEFAULT_CLUSTERS, seed: int = DEFAULT_SEED) -> ClusterModel:
    """
    Cluster the graph's entities into k semantic clusters.

    Runs on the normalized base (pre-aggregation) vectors.

    Raises:
        ConfigError: If k < 2 or k exceeds the number of entities
    """
    return kmeans_points(normalize_rows(store.entity_vectors), k, seed)
