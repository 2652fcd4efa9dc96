"""
Untrained relational-attention aggregation over the knowledge graph.

Each layer updates every entity synchronously:

    a(v, u) = softmax over N(v) of cos(h_v, h_u)
    m_v     = sum over (r, u) in N(v) of a(v, u) * (h_u + r_hat)
    h_v'    = normalize(h_v + m_v)

starting from the normalized base vectors. Relation vectors enter the
message unit-normalized, so uniformly rescaling every base vector leaves
the result unchanged.
"""
import logging
from dataclasses import replace

import numpy as np

from kgexplain.config.constants import DEFAULT_LAYERS
from kgexplain.embedding.store import EmbeddingStore, cosine_matrix, normalize, normalize_rows
from kgexplain.errors import MissingEmbeddingError
from kgexplain.kg.graph import KnowledgeGraph

logger = logging.getLogger(__name__)


def softmax(scores: np.ndarray) -> np.ndarray:
    shifted = np.exp(scores - np.max(scores))
    return shifted / shifted.sum()


def aggregate_structure(g: KnowledgeGraph, store: EmbeddingStore, layers: int = DEFAULT_LAYERS) -> EmbeddingStore:
    """
    Apply `layers` rounds of attention-weighted neighbor aggregation.

    Args:
        g: Knowledge graph the store was built for
        store: Store with base vectors for every entity and relation
        layers: Number of aggregation layers K (0 returns the normalized base)

    Returns:
        EmbeddingStore: Copy with unit-norm aggregated vectors

    Raises:
        MissingEmbeddingError: If a relation used by the graph has no vector
    """
    if store.entity_vectors.shape[0] != g.num_entities:
        raise MissingEmbeddingError(
            f"Store has {store.entity_vectors.shape[0]} entity vectors, graph has {g.num_entities} entities"
        )
    used = sorted({t.relation for t in g.triples})
    missing = [r for r in used if r >= len(store.relation_mask) or not store.relation_mask[r]]
    if missing:
        raise MissingEmbeddingError(f"No vector for relation {g.relation_names[missing[0]]!r}")

    h = normalize_rows(store.entity_vectors)
    rel = normalize_rows(store.relation_vectors) if store.relation_vectors.size else store.relation_vectors

    neighbor_ids = [np.array([u for _, u, _ in g.adjacency[v]], dtype=int) for v in range(g.num_entities)]
    relation_ids = [np.array([r for r, _, _ in g.adjacency[v]], dtype=int) for v in range(g.num_entities)]

    for _ in range(layers):
        updated = h.copy()
        for v in range(g.num_entities):
            nbrs = neighbor_ids[v]
            if nbrs.size == 0:
                continue
            hu = h[nbrs]
            attention = softmax(cosine_matrix(hu, h[v]))
            message = attention @ (hu + rel[relation_ids[v]])
            updated[v] = normalize(h[v] + message)
        h = updated

    logger.info(f"Aggregated structure over {layers} layer(s) for {g.num_entities} entities")
    return replace(store, aggregated=h, layers=layers)
