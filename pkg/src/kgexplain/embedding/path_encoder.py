"""
Path encoding: mean pooling of aggregated entity vectors and unit relation
vectors along a reasoning path. The result ignores order, so a path and its
reversal encode identically.
"""
from typing import Sequence

import numpy as np

from kgexplain.embedding.store import EmbeddingStore, normalize


def encode_sequence(store: EmbeddingStore, entities: Sequence[int], relations: Sequence[int]) -> np.ndarray:
    """
    Raises:
        MissingEmbeddingError: If an entity or relation has no vector
    """
    parts = [store.entity(v) for v in entities] + [store.relation(r) for r in relations]
    return normalize(np.mean(parts, axis=0))


def encode_path(store: EmbeddingStore, path) -> np.ndarray:
    """Encode a ReasoningPath (anything exposing `entities` and `relations`)."""
    return encode_sequence(store, path.entities, path.relations)
