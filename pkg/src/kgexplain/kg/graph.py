"""
Knowledge graph loading and adjacency queries.

Entity and relation names are interned to dense integer ids assigned in
sorted-name order, so the same set of triples always yields the same ids
no matter how the input lines are ordered. The graph is traversed as
undirected; every adjacency entry records the orientation of the stored
triple relative to the queried node.
"""
import logging
from collections import defaultdict
from dataclasses import dataclass, field
from enum import Enum
from typing import Dict, Iterable, List, Optional, Sequence, Tuple

from kgexplain.errors import EmptyGraphError, GraphParseError, UnknownEntityError

logger = logging.getLogger(__name__)

EntityId = int
RelationId = int


class Direction(str, Enum):
    OUTGOING = "out"   # stored triple is (v, r, neighbor)
    INCOMING = "in"    # stored triple is (neighbor, r, v)

    def reverse(self) -> "Direction":
        return Direction.INCOMING if self is Direction.OUTGOING else Direction.OUTGOING


_DIRECTION_ORDER = {Direction.OUTGOING: 0, Direction.INCOMING: 1}


@dataclass(frozen=True)
class Triple:
    head: EntityId
    relation: RelationId
    tail: EntityId


Edge = Tuple[RelationId, EntityId, Direction]


@dataclass
class KnowledgeGraph:
    """Immutable-after-load typed triple store with symmetric adjacency."""
    entity_names: List[str]
    relation_names: List[str]
    triples: Tuple[Triple, ...]
    adjacency: List[Tuple[Edge, ...]] = field(repr=False)
    entity_index: Dict[str, EntityId] = field(repr=False)
    relation_index: Dict[str, RelationId] = field(repr=False)

    @property
    def num_entities(self) -> int:
        return len(self.entity_names)

    @property
    def num_relations(self) -> int:
        return len(self.relation_names)

    def degree(self, v: EntityId) -> int:
        self._check(v)
        return len(self.adjacency[v])

    def neighbors(self, v: EntityId) -> List[Edge]:
        """
        Incident edges of v in (relation-id, neighbor-id, direction) order.

        Raises:
            UnknownEntityError: If v is not a valid entity id
        """
        self._check(v)
        return list(self.adjacency[v])

    def entity_id(self, name: str) -> EntityId:
        try:
            return self.entity_index[name]
        except KeyError:
            raise UnknownEntityError(f"Unknown entity: {name!r}") from None

    def relation_id(self, name: str) -> RelationId:
        try:
            return self.relation_index[name]
        except KeyError:
            raise UnknownEntityError(f"Unknown relation: {name!r}") from None

    def entity_name(self, v: EntityId) -> str:
        self._check(v)
        return self.entity_names[v]

    def relation_name(self, r: RelationId) -> str:
        if not 0 <= r < len(self.relation_names):
            raise UnknownEntityError(f"Unknown relation id: {r}")
        return self.relation_names[r]

    def has_edge(self, u: EntityId, r: RelationId, v: EntityId, direction: Direction) -> bool:
        """True if the step u -r-> v exists with the given stored orientation."""
        return (r, v, direction) in self.adjacency[u]

    def to_lines(self) -> List[str]:
        """Serialize triples as tab-separated lines in id order."""
        return [
            f"{self.entity_names[t.head]}\t{self.relation_names[t.relation]}\t{self.entity_names[t.tail]}"
            for t in self.triples
        ]

    def _check(self, v: EntityId) -> None:
        if not isinstance(v, int) or not 0 <= v < len(self.entity_names):
            raise UnknownEntityError(f"Unknown entity id: {v}")


def _parse_triple_lines(lines: Iterable[str], source: Optional[str]) -> List[Tuple[str, str, str]]:
    records = []
    for line_number, raw in enumerate(lines, start=1):
        line = raw.rstrip("\r\n")
        if not line.strip() or line.lstrip().startswith("#"):
            continue
        parts = line.split("\t")
        if len(parts) != 3:
            raise GraphParseError(line_number, f"expected 3 tab-separated fields, got {len(parts)}", source)
        head, relation, tail = (p.strip() for p in parts)
        if not head or not relation or not tail:
            raise GraphParseError(line_number, "empty head/relation/tail field", source)
        records.append((head, relation, tail))
    return records


def load_graph(
    triple_source: Iterable[str],
    extra_entities: Sequence[str] = (),
    source: Optional[str] = None,
) -> KnowledgeGraph:
    """
    Build a KnowledgeGraph from `head<TAB>relation<TAB>tail` lines.

    Args:
        triple_source: Iterable of text lines; '#' comments and blank lines are skipped
        extra_entities: Entity names to intern even without incident triples
                        (e.g. catalog items)
        source: Optional file name used in error messages

    Returns:
        KnowledgeGraph: Graph with interned ids, deduplicated triples,
                        sorted adjacency and degrees

    Raises:
        GraphParseError: On a line without exactly three non-empty fields
        EmptyGraphError: If no triple was read
    """
    records = _parse_triple_lines(triple_source, source)
    if not records:
        raise EmptyGraphError(f"No triples found in {source or 'input'}")

    self_loops = [r for r in records if r[0] == r[2]]
    if self_loops:
        logger.warning(f"Dropping {len(self_loops)} self-loop triple(s), e.g. {self_loops[0]}")
    records = [r for r in records if r[0] != r[2]]

    entity_names = sorted({r[0] for r in records} | {r[2] for r in records} | {e for e in extra_entities if e})
    relation_names = sorted({r[1] for r in records})
    entity_index = {name: i for i, name in enumerate(entity_names)}
    relation_index = {name: i for i, name in enumerate(relation_names)}

    unique = {
        Triple(entity_index[h], relation_index[r], entity_index[t])
        for h, r, t in records
    }
    duplicates = len(records) - len(unique)
    if duplicates:
        logger.info(f"Removed {duplicates} duplicate triple(s)")
    triples = tuple(sorted(unique, key=lambda t: (t.head, t.relation, t.tail)))

    adjacency_lists: Dict[int, List[Edge]] = defaultdict(list)
    for t in triples:
        adjacency_lists[t.head].append((t.relation, t.tail, Direction.OUTGOING))
        adjacency_lists[t.tail].append((t.relation, t.head, Direction.INCOMING))
    adjacency = [
        tuple(sorted(adjacency_lists.get(v, []), key=lambda e: (e[0], e[1], _DIRECTION_ORDER[e[2]])))
        for v in range(len(entity_names))
    ]

    logger.info(f"Loaded graph: {len(entity_names)} entities, {len(relation_names)} relations, {len(triples)} triples")
    return KnowledgeGraph(
        entity_names=entity_names,
        relation_names=relation_names,
        triples=triples,
        adjacency=adjacency,
        entity_index=entity_index,
        relation_index=relation_index,
    )


def neighbors(g: KnowledgeGraph, v: EntityId) -> List[Edge]:
    """Module-level alias of KnowledgeGraph.neighbors."""
    return g.neighbors(v)
