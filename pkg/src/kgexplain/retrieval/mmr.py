"""
Maximal marginal relevance selection over scored paths.
"""
from typing import List, Sequence, Tuple

import numpy as np

from kgexplain.embedding.path_encoder import encode_path
from kgexplain.embedding.store import EmbeddingStore, cosine
from kgexplain.errors import ConfigError
from kgexplain.retrieval.paths import ReasoningPath
from kgexplain.retrieval.scoring import PathScore


def mmr_select(
    candidates: Sequence[Tuple[ReasoningPath, PathScore]],
    store: EmbeddingStore,
    gamma: float,
    n: int,
) -> List[ReasoningPath]:
    """
    Greedy selection maximizing gamma * S(p) - (1 - gamma) * max cos(h_p, h_q)
    over already selected q.

    The diversity penalty is 0 while nothing is selected. Only a strictly
    greater value replaces the current best, so ties keep the earliest
    candidate.

    Args:
        candidates: (path, score) pairs in deterministic candidate order
        store: Store used to encode paths lacking a cached encoding
        gamma: Relevance weight in [0, 1]
        n: Number of paths to select, >= 1

    Returns:
        Selected paths in pick order, min(n, len(candidates)) of them
    """
    if not 0.0 <= gamma <= 1.0:
        raise ConfigError(f"gamma must be in [0, 1], got {gamma}")
    if n < 1:
        raise ConfigError(f"N must be >= 1, got {n}")

    encodings = [s.encoding if s.encoding is not None else encode_path(store, p) for p, s in candidates]
    remaining = list(range(len(candidates)))
    # max similarity of each candidate to the selected set
    penalty = np.full(len(candidates), 0.0)
    selected: List[int] = []

    while remaining and len(selected) < n:
        best, best_value = None, None
        for i in remaining:
            value = gamma * candidates[i][1].score - (1.0 - gamma) * (penalty[i] if selected else 0.0)
            if best_value is None or value > best_value:
                best, best_value = i, value
        selected.append(best)
        remaining.remove(best)
        for i in remaining:
            sim = cosine(encodings[i], encodings[best])
            penalty[i] = sim if len(selected) == 1 else max(penalty[i], sim)

    return [candidates[i][0] for i in selected]
