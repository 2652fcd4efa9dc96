"""
Candidate reasoning-path enumeration around a target item.

Hop count fixes a path's role:
    1 hop   target -- attribute                  (explicit feature)
    2 hops  history item -- entity -- target     (relational link)
    3 hops  history item -- e1 -- e2 -- target   (implicit preference)
"""
import heapq
import logging
from dataclasses import dataclass
from enum import Enum
from typing import Iterator, List, Optional, Tuple

from kgexplain.config.constants import DEFAULT_CANDIDATE_CAP, DEFAULT_MAX_HOPS
from kgexplain.errors import ConfigError
from kgexplain.kg.catalog import ItemCatalog
from kgexplain.kg.graph import Direction, EntityId, KnowledgeGraph, RelationId
from kgexplain.kg.history import UserHistory

logger = logging.getLogger(__name__)


class HopRole(str, Enum):
    EXPLICIT = "EXPLICIT"
    RELATIONAL = "RELATIONAL"
    IMPLICIT = "IMPLICIT"

    @classmethod
    def for_hops(cls, hops: int) -> "HopRole":
        return {1: cls.EXPLICIT, 2: cls.RELATIONAL, 3: cls.IMPLICIT}[hops]


@dataclass(frozen=True)
class ReasoningPath:
    """
    A simple path through the graph ending (or, for 1 hop, starting) at the target.

    directions[k] is the stored orientation of the triple linking
    entities[k] and entities[k + 1]: OUTGOING when the triple reads
    (entities[k], relations[k], entities[k + 1]).
    """
    entities: Tuple[EntityId, ...]
    relations: Tuple[RelationId, ...]
    directions: Tuple[Direction, ...]
    target: EntityId
    anchor: Optional[str] = None  # history item id for 2/3-hop paths

    @property
    def hops(self) -> int:
        return len(self.relations)

    @property
    def role(self) -> HopRole:
        return HopRole.for_hops(self.hops)

    def evidence_nodes(self) -> Tuple[EntityId, ...]:
        """Scored nodes: every entity on the path except the target."""
        return tuple(v for v in self.entities if v != self.target)

    def sort_key(self) -> tuple:
        return (
            self.hops,
            self.entities,
            self.relations,
            tuple(0 if d is Direction.OUTGOING else 1 for d in self.directions),
        )

    def steps(self) -> Iterator[Tuple[EntityId, RelationId, Direction, EntityId]]:
        for k, r in enumerate(self.relations):
            yield self.entities[k], r, self.directions[k], self.entities[k + 1]

    def is_valid(self, g: KnowledgeGraph) -> bool:
        """Simple, 1..3 hops, and every step present in the adjacency."""
        if not 1 <= self.hops <= 3 or len(self.entities) != self.hops + 1:
            return False
        if len(set(self.entities)) != len(self.entities) or self.target not in self.entities:
            return False
        return all(g.has_edge(u, r, v, d) for u, r, d, v in self.steps())


@dataclass
class PathCandidates:
    paths: List[ReasoningPath]
    truncated: bool
    total: int


def _one_hop(g: KnowledgeGraph, cat: ItemCatalog, t: EntityId) -> Iterator[ReasoningPath]:
    for r, u, d in g.adjacency[t]:
        if not cat.is_item_entity(u):
            yield ReasoningPath((t, u), (r,), (d,), target=t)


def _multi_hop(
    g: KnowledgeGraph, start: EntityId, t: EntityId, max_hops: int, anchor: str
) -> Iterator[ReasoningPath]:
    # depth-first over simple paths start -> ... -> t of 2..max_hops edges
    stack = [((start,), (), ())]
    while stack:
        entities, relations, directions = stack.pop()
        depth = len(relations)
        for r, u, d in g.adjacency[entities[-1]]:
            if u in entities:
                continue
            if u == t:
                if depth + 1 >= 2:
                    yield ReasoningPath(entities + (u,), relations + (r,), directions + (d,), target=t, anchor=anchor)
                continue
            if depth + 2 <= max_hops:
                stack.append((entities + (u,), relations + (r,), directions + (d,)))


def enumerate_paths(
    g: KnowledgeGraph,
    cat: ItemCatalog,
    history: UserHistory,
    target: str,
    max_hops: int = DEFAULT_MAX_HOPS,
    cap: int = DEFAULT_CANDIDATE_CAP,
) -> PathCandidates:
    """
    Enumerate candidate evidence paths for a target item.

    Paths are ordered by (hop count, entity ids, relation ids, directions)
    and the first `cap` are kept.

    Args:
        g: Knowledge graph
        cat: Catalog bound to g
        history: User history providing 2/3-hop anchors
        target: Target item id
        max_hops: 1..3
        cap: Maximum number of candidates returned

    Returns:
        PathCandidates: Kept paths, truncation flag and untruncated count

    Raises:
        UnknownItemError: If the target is not catalogued or not in the graph
        ConfigError: On max_hops outside 1..3 or cap < 1
    """
    if not 1 <= max_hops <= 3:
        raise ConfigError(f"max_hops must be in 1..3, got {max_hops}")
    if cap < 1:
        raise ConfigError(f"Candidate cap must be >= 1, got {cap}")

    t = cat.entity(target)
    anchors = []
    for item_id in dict.fromkeys(history.items):
        if item_id == target:
            continue
        if item_id not in cat.entity_of:
            logger.warning(f"History item {item_id!r} of user {history.user_id!r} is not in the graph; skipped")
            continue
        anchors.append((cat.entity_of[item_id], item_id))

    def generate() -> Iterator[ReasoningPath]:
        yield from _one_hop(g, cat, t)
        if max_hops >= 2:
            for start, item_id in anchors:
                yield from _multi_hop(g, start, t, max_hops, item_id)

    total = 0

    def counted() -> Iterator[ReasoningPath]:
        nonlocal total
        for p in generate():
            total += 1
            yield p

    paths = heapq.nsmallest(cap, counted(), key=ReasoningPath.sort_key)
    truncated = total > cap
    if truncated:
        logger.warning(f"Candidate paths for {history.user_id}/{target} truncated: kept {cap} of {total}")
    return PathCandidates(paths=paths, truncated=truncated, total=total)
