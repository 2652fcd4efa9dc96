"""
Evidence block serialization.

One line per path, tagged with its hop role:

    [EXPLICIT] (Inception) -[has_genre]-> (science fiction)
    [RELATIONAL] (Memento) -[directed_by]-> (Christopher Nolan) <-[directed_by]- (Inception)

`-[r]->` follows the stored triple's orientation, `<-[r]-` walks it
backwards. parse_evidence inverts serialize_paths exactly.
"""
import re
from typing import List, Optional, Sequence

from kgexplain.errors import DataError
from kgexplain.kg.catalog import ItemCatalog
from kgexplain.kg.graph import Direction, KnowledgeGraph
from kgexplain.retrieval.paths import HopRole, ReasoningPath

_LINE = re.compile(r"^\[(EXPLICIT|RELATIONAL|IMPLICIT)\] \((.*)\)$")
_STEP = re.compile(r"\) (-\[(.+?)\]->|<-\[(.+?)\]-) \(")


def serialize_path(p: ReasoningPath, g: KnowledgeGraph) -> str:
    parts = [f"[{p.role.value}] ({g.entity_name(p.entities[0])})"]
    for _, r, d, v in p.steps():
        rel = g.relation_name(r)
        arrow = f"-[{rel}]->" if d is Direction.OUTGOING else f"<-[{rel}]-"
        parts.append(f"{arrow} ({g.entity_name(v)})")
    return " ".join(parts)


def serialize_paths(paths: Sequence[ReasoningPath], g: KnowledgeGraph) -> str:
    """Evidence block in selection order; empty string for no paths."""
    return "\n".join(serialize_path(p, g) for p in paths)


def split_evidence_line(line: str):
    """
    Split one evidence line into (role, entity names, relation names, directions).

    Returns None for lines that are not evidence lines.
    """
    match = _LINE.match(line.strip())
    if not match:
        return None
    role, body = HopRole(match.group(1)), match.group(2)
    names, relations, directions = [], [], []
    cursor = 0
    for step in _STEP.finditer(body):
        names.append(body[cursor:step.start()])
        if step.group(2) is not None:
            relations.append(step.group(2))
            directions.append(Direction.OUTGOING)
        else:
            relations.append(step.group(3))
            directions.append(Direction.INCOMING)
        cursor = step.end()
    names.append(body[cursor:])
    return role, names, relations, directions


def parse_evidence(block: str, g: KnowledgeGraph, cat: Optional[ItemCatalog] = None) -> List[ReasoningPath]:
    """
    Rebuild ReasoningPaths from an evidence block.

    The target is the first entity of an EXPLICIT line and the last entity
    otherwise. With a catalog, 2/3-hop anchors are restored as item ids.

    Raises:
        DataError: On a malformed line, a hop count contradicting its tag,
                   or a step missing from the graph
        UnknownEntityError: On an unknown entity or relation name
    """
    paths = []
    for line_number, line in enumerate(block.splitlines(), start=1):
        if not line.strip():
            continue
        parsed = split_evidence_line(line)
        if parsed is None:
            raise DataError(f"Evidence line {line_number} is malformed: {line[:60]!r}")
        role, names, relation_names, directions = parsed
        if HopRole.for_hops(len(relation_names)) is not role:
            raise DataError(f"Evidence line {line_number}: {len(relation_names)} hop(s) tagged {role.value}")

        entities = tuple(g.entity_id(n) for n in names)
        target = entities[0] if role is HopRole.EXPLICIT else entities[-1]
        anchor = None
        if role is not HopRole.EXPLICIT and cat is not None:
            anchor = cat.item_of_entity.get(entities[0])
        path = ReasoningPath(
            entities=entities,
            relations=tuple(g.relation_id(r) for r in relation_names),
            directions=tuple(directions),
            target=target,
            anchor=anchor,
        )
        if not path.is_valid(g):
            raise DataError(f"Evidence line {line_number} is not a simple path of the graph")
        paths.append(path)
    return paths


def attribute_names(block: str) -> List[str]:
    """
    Names of the attribute attached to the target on EXPLICIT and IMPLICIT
    lines, in first-appearance order. Works on text alone.

    Only the entity adjacent to the target is credited: the last name on an
    EXPLICIT line, the second-to-last on an IMPLICIT line. Intermediate
    nodes of longer IMPLICIT paths are never named. RELATIONAL lines are
    ignored.
    """
    seen: List[str] = []
    for line in block.splitlines():
        parsed = split_evidence_line(line)
        if parsed is None:
            continue
        role, names, _, _ = parsed
        if role is HopRole.EXPLICIT:
            name = names[-1]
        elif role is HopRole.IMPLICIT:
            name = names[-2]
        else:
            continue
        if name not in seen:
            seen.append(name)
    return seen
