"""
Multi-view node specificity.

A node is "specific" when it is rare in the graph (inverse degree), when
its neighborhood stays within few semantic clusters (low cluster entropy)
and when it points in the direction of the user's current intent. The
three views are mixed linearly with weights that sum to one, so every
score stays in [0, 1].
"""
import math
from dataclasses import dataclass, field
from typing import Dict, Optional

import numpy as np

from kgexplain.config.constants import (
    DEFAULT_LAMBDA_PREF,
    DEFAULT_LAMBDA_SEM,
    DEFAULT_LAMBDA_STRUCT,
    DEFAULT_PENALTY,
    DEFAULT_SMOOTHING,
)
from kgexplain.embedding.clustering import ClusterModel
from kgexplain.embedding.store import EmbeddingStore, cosine
from kgexplain.errors import ConfigError
from kgexplain.kg.graph import EntityId, KnowledgeGraph

WEIGHT_SUM_TOLERANCE = 1e-9


@dataclass(frozen=True)
class SpecificityWeights:
    struct: float = DEFAULT_LAMBDA_STRUCT
    sem: float = DEFAULT_LAMBDA_SEM
    pref: float = DEFAULT_LAMBDA_PREF
    penalty: float = DEFAULT_PENALTY
    smoothing: float = DEFAULT_SMOOTHING

    def validate(self) -> "SpecificityWeights":
        """
        Raises:
            ConfigError: Negative weight, weights not summing to 1,
                         smoothing below 1 or negative penalty
        """
        for name in ("struct", "sem", "pref"):
            if getattr(self, name) < 0:
                raise ConfigError(f"Specificity weight '{name}' must be >= 0, got {getattr(self, name)}")
        total = self.struct + self.sem + self.pref
        if abs(total - 1.0) > WEIGHT_SUM_TOLERANCE:
            raise ConfigError(f"Specificity weights must sum to 1, got {total!r}")
        if self.smoothing < 1.0:
            raise ConfigError(f"Specificity smoothing must be >= 1, got {self.smoothing}")
        if self.penalty < 0:
            raise ConfigError(f"Specificity penalty must be >= 0, got {self.penalty}")
        return self

    def combine(self, struct: float, sem: float, pref: float) -> float:
        mixed = self.struct * struct + self.sem * sem + self.pref * pref
        return min(1.0, max(0.0, mixed))


def struct_from_degree(degree: int, penalty: float = DEFAULT_PENALTY, smoothing: float = DEFAULT_SMOOTHING) -> float:
    return math.exp(-penalty * math.log(degree + smoothing))


def specificity_struct(
    g: KnowledgeGraph,
    v: EntityId,
    penalty: float = DEFAULT_PENALTY,
    smoothing: float = DEFAULT_SMOOTHING,
) -> float:
    """
    Inverse-degree specificity exp(-penalty * log(deg(v) + smoothing)).

    With smoothing >= 1 the result lies in (0, 1] and never increases with degree.
    """
    return struct_from_degree(g.degree(v), penalty, smoothing)


def entropy_specificity(distribution: np.ndarray, k: int) -> float:
    """1 - H(p) / log k with 0 log 0 taken as 0."""
    p = distribution[distribution > 0]
    if p.size == 0 or k < 2:
        return 1.0
    h = float(-np.sum(p * np.log(p)))
    return float(min(1.0, max(0.0, 1.0 - h / math.log(k))))


def specificity_sem(g: KnowledgeGraph, clusters: ClusterModel, v: EntityId) -> float:
    """
    Cluster-entropy specificity of v's neighborhood.

    Nodes without neighbors are maximally specific (1.0).
    """
    nbrs = g.neighbors(v)
    if not nbrs:
        return 1.0
    counts = np.bincount([clusters.cluster_of(u) for _, u, _ in nbrs], minlength=clusters.k)
    return entropy_specificity(counts / counts.sum(), clusters.k)


def specificity_pref(store: EmbeddingStore, v: EntityId, intent) -> float:
    """Alignment with the user intent, (1 + cos(node, intent)) / 2."""
    return (1.0 + cosine(store.entity(v), intent.vector)) / 2.0


def specificity(
    g: KnowledgeGraph,
    store: EmbeddingStore,
    clusters: ClusterModel,
    v: EntityId,
    intent,
    w: SpecificityWeights,
) -> float:
    return w.combine(
        specificity_struct(g, v, w.penalty, w.smoothing),
        specificity_sem(g, clusters, v),
        specificity_pref(store, v, intent),
    )


@dataclass(frozen=True)
class NodeSpecificity:
    entity: EntityId
    struct: float
    sem: float
    pref: float
    combined: float

    def to_dict(self) -> Dict[str, float]:
        return {
            "entity": self.entity,
            "struct": self.struct,
            "sem": self.sem,
            "pref": self.pref,
            "combined": self.combined,
        }


@dataclass
class SpecificityContext:
    """
    Per-request specificity calculator with a node cache.

    `disabled` turns every node into a maximally specific one,
    which reduces path scores to pure relevance.
    """
    g: KnowledgeGraph
    store: EmbeddingStore
    clusters: ClusterModel
    intent: object
    weights: SpecificityWeights = field(default_factory=SpecificityWeights)
    disabled: bool = False
    _cache: Dict[EntityId, NodeSpecificity] = field(default_factory=dict, repr=False)

    def node(self, v: EntityId) -> NodeSpecificity:
        cached: Optional[NodeSpecificity] = self._cache.get(v)
        if cached is not None:
            return cached
        if self.disabled:
            result = NodeSpecificity(v, 1.0, 1.0, 1.0, 1.0)
        else:
            s = specificity_struct(self.g, v, self.weights.penalty, self.weights.smoothing)
            m = specificity_sem(self.g, self.clusters, v)
            p = specificity_pref(self.store, v, self.intent)
            result = NodeSpecificity(v, s, m, p, self.weights.combine(s, m, p))
        self._cache[v] = result
        return result

    def __call__(self, v: EntityId) -> float:
        return self.node(v).combined
