"""
Retrieval result export: JSON-lines records and pandas frames.
"""
from typing import Any, Dict, Iterable, List

import pandas as pd

from kgexplain.kg.graph import KnowledgeGraph
from kgexplain.retrieval.paths import ReasoningPath
from kgexplain.retrieval.pipeline import RetrievalResult


def path_names(p: ReasoningPath, g: KnowledgeGraph) -> Dict[str, List[str]]:
    return {
        "entities": [g.entity_name(v) for v in p.entities],
        "relations": [g.relation_name(r) for r in p.relations],
        "directions": [d.value for d in p.directions],
    }


def result_to_record(result: RetrievalResult, g: KnowledgeGraph) -> Dict[str, Any]:
    """
    One auditable record per (user, target): ranked paths with relevance,
    mean specificity and per-node specificity terms. Timing is left out so
    records are reproducible.
    """
    paths = []
    for rank, (p, s) in enumerate(result.selected, start=1):
        nodes = []
        for n in s.nodes:
            node = n.to_dict()
            node["name"] = g.entity_name(n.entity)
            nodes.append(node)
        paths.append({
            "rank": rank,
            "hops": p.hops,
            "role": p.role.value,
            "anchor": p.anchor,
            **path_names(p, g),
            "relevance": s.relevance,
            "specificity": s.specificity,
            "score": s.score,
            "nodes": nodes,
        })

    record: Dict[str, Any] = {
        "user_id": result.user_id,
        "target": result.target,
        "strategy": result.strategy,
        "ablations": result.ablations,
        "gamma": result.gamma,
        "candidates": result.candidates,
        "truncated": result.truncated,
        "paths": paths,
    }
    if result.intent is not None:
        record["intent_weights"] = {
            item: float(w) for item, w in zip(result.intent.history_items, result.intent.weights)
        }
    return record


def paths_frame(results: Iterable[RetrievalResult], g: KnowledgeGraph) -> pd.DataFrame:
    """Flat table of selected paths, one row per (user, rank)."""
    rows = []
    for result in results:
        for rank, (p, s) in enumerate(result.selected, start=1):
            names = path_names(p, g)
            rows.append({
                "user_id": result.user_id,
                "target": result.target,
                "rank": rank,
                "role": p.role.value,
                "path": " | ".join(names["entities"]),
                "relations": " | ".join(names["relations"]),
                "relevance": round(s.relevance, 6),
                "specificity": round(s.specificity, 6),
                "score": round(s.score, 6),
            })
    columns = ["user_id", "target", "rank", "role", "path", "relations", "relevance", "specificity", "score"]
    return pd.DataFrame(rows, columns=columns)
