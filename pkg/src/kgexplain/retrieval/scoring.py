"""
Path scoring: global relevance to the user's intent times the mean
specificity of the path's evidence nodes.
"""
from dataclasses import dataclass, field
from typing import Dict, List, Tuple

import numpy as np

from kgexplain.embedding.path_encoder import encode_path
from kgexplain.embedding.store import EmbeddingStore, cosine
from kgexplain.retrieval.paths import ReasoningPath
from kgexplain.retrieval.specificity import NodeSpecificity, SpecificityContext


@dataclass(frozen=True)
class PathScore:
    relevance: float
    specificity: float
    score: float
    nodes: Tuple[NodeSpecificity, ...] = ()
    encoding: np.ndarray = field(default=None, repr=False, compare=False)

    def to_dict(self) -> Dict[str, object]:
        return {
            "relevance": self.relevance,
            "specificity": self.specificity,
            "score": self.score,
            "nodes": [n.to_dict() for n in self.nodes],
        }


def score_path(store: EmbeddingStore, intent, path: ReasoningPath, ctx: SpecificityContext) -> PathScore:
    """
    Relevance times the mean specificity of the scored nodes.

    The scored nodes exclude the target; a path with no other node (impossible for
    valid paths) gets mean specificity 1.

    Raises:
        MissingEmbeddingError: If a node or relation has no vector
    """
    encoding = encode_path(store, path)
    relevance = cosine(intent.vector, encoding)
    nodes = tuple(ctx.node(v) for v in path.evidence_nodes())
    mean_spec = float(np.mean([n.combined for n in nodes])) if nodes else 1.0
    return PathScore(
        relevance=relevance,
        specificity=mean_spec,
        score=relevance * mean_spec,
        nodes=nodes,
        encoding=encoding,
    )


def score_paths(
    store: EmbeddingStore, intent, paths: List[ReasoningPath], ctx: SpecificityContext
) -> List[Tuple[ReasoningPath, PathScore]]:
    return [(p, score_path(store, intent, p, ctx)) for p in paths]
