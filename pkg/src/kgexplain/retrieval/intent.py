"""
Target-aware user intent.

The target item queries the user's history: attention weights are a
temperature softmax over the cosine between the target's aggregated
vector and each history item's, and the intent is the weighted sum of the
(optionally value-projected) history vectors.
"""
import logging
from dataclasses import dataclass
from pathlib import Path
from typing import List, Optional, Union

import numpy as np

from kgexplain.config.constants import DEFAULT_INTENT_TEMPERATURE
from kgexplain.embedding.aggregate import softmax
from kgexplain.embedding.store import EmbeddingStore, cosine_matrix
from kgexplain.errors import DataError, DimensionMismatchError, EmptyHistoryError, MissingEmbeddingError
from kgexplain.kg.catalog import ItemCatalog
from kgexplain.kg.history import UserHistory

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class IntentVector:
    user_id: str
    target: str
    vector: np.ndarray
    history_items: List[str]
    weights: np.ndarray

    def weight_of(self, item_id: str) -> float:
        return float(self.weights[self.history_items.index(item_id)])


def load_value_matrix(path: Union[str, Path], dim: int) -> np.ndarray:
    """
    Load a square value projection saved with numpy.savetxt.

    Raises:
        DataError: If the file cannot be parsed
        DimensionMismatchError: If the matrix is not dim x dim
    """
    try:
        matrix = np.loadtxt(path, dtype=float, ndmin=2)
    except (OSError, ValueError) as e:
        raise DataError(f"Cannot load value matrix {path}: {e}") from e
    if matrix.shape != (dim, dim):
        raise DimensionMismatchError(f"Value matrix {path} has shape {matrix.shape}, expected ({dim}, {dim})")
    return matrix


def compute_intent(
    store: EmbeddingStore,
    cat: ItemCatalog,
    history: UserHistory,
    target: str,
    temperature: float = DEFAULT_INTENT_TEMPERATURE,
    value_matrix: Optional[np.ndarray] = None,
) -> IntentVector:
    """
    Compute the target-conditioned user intent for one (user, target) pair.

    Args:
        store: Store with aggregated vectors
        cat: Catalog bound to the store's graph
        history: The user's retained history (the target and uncatalogued items are skipped)
        target: Target item id
        temperature: Softmax temperature over cosines
        value_matrix: Optional square projection; identity when None

    Returns:
        IntentVector: Weights sum to 1 and follow history order

    Raises:
        EmptyHistoryError: If no catalogued history item remains
        UnknownItemError: If the target is not catalogued
        MissingEmbeddingError: If an item has no vector
    """
    items = []
    for item_id in history.items:
        if item_id == target:
            continue
        if item_id not in cat.entity_of:
            logger.warning(f"History item {item_id!r} of user {history.user_id!r} is not in the graph; skipped")
            continue
        items.append(item_id)
    if not items:
        raise EmptyHistoryError(f"User {history.user_id!r} has no history items besides the target")

    target_vec = store.entity(cat.entity(target))
    keys = np.array([store.entity(cat.entity(i)) for i in items])
    if keys.shape[1] != store.dim:
        raise MissingEmbeddingError(f"History vectors of user {history.user_id!r} do not match the store")

    weights = softmax(cosine_matrix(keys, target_vec) / temperature)
    values = keys if value_matrix is None else keys @ value_matrix.T
    vector = weights @ values

    logger.debug(f"Intent for {history.user_id}/{target}: weights={np.round(weights, 4).tolist()}")
    return IntentVector(
        user_id=history.user_id,
        target=target,
        vector=vector,
        history_items=items,
        weights=weights,
    )
