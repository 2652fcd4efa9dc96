"""
Item catalog: item ids aligned to graph entities, titles and ground-truth attributes.

JSON-lines schema, one item per line:
    {"item_id": "eleanor_oliphant", "entity": "Eleanor Oliphant Is Completely Fine",
     "title": "Eleanor Oliphant Is Completely Fine", "attributes": ["humor", "loneliness"]}
"""
import logging
from dataclasses import dataclass, field
from typing import Dict, FrozenSet, Iterable, List, Optional

from kgexplain.errors import DataError, UnknownItemError
from kgexplain.kg.graph import EntityId, KnowledgeGraph
from kgexplain.utils.io import iter_jsonl

logger = logging.getLogger(__name__)


def normalize_feature(text: str) -> str:
    """Case-fold and trim a feature string; inner whitespace runs collapse to one space."""
    return " ".join(str(text).split()).casefold()


@dataclass
class CatalogItem:
    item_id: str
    entity_name: str
    title: str
    attributes: FrozenSet[str]


@dataclass
class ItemCatalog:
    items: Dict[str, CatalogItem]
    entity_of: Dict[str, EntityId] = field(default_factory=dict)
    item_of_entity: Dict[EntityId, str] = field(default_factory=dict)

    def __contains__(self, item_id: str) -> bool:
        return item_id in self.items

    def __len__(self) -> int:
        return len(self.items)

    def get(self, item_id: str) -> CatalogItem:
        try:
            return self.items[item_id]
        except KeyError:
            raise UnknownItemError(f"Unknown item: {item_id!r}") from None

    def entity(self, item_id: str) -> EntityId:
        if item_id not in self.entity_of:
            raise UnknownItemError(f"Item {item_id!r} is not aligned to a graph entity")
        return self.entity_of[item_id]

    def title(self, item_id: str) -> str:
        return self.get(item_id).title

    def is_item_entity(self, v: EntityId) -> bool:
        return v in self.item_of_entity

    def vocabulary(self) -> FrozenSet[str]:
        """Union of all ground-truth attributes; the default feature lexicon."""
        vocab = set()
        for item in self.items.values():
            vocab |= item.attributes
        return frozenset(vocab)

    def bind(self, graph: KnowledgeGraph) -> "ItemCatalog":
        """
        Resolve every item's entity name against a graph.

        Raises:
            DataError: If an item's entity is not in the graph
        """
        self.entity_of = {}
        self.item_of_entity = {}
        for item in self.items.values():
            if item.entity_name not in graph.entity_index:
                raise DataError(f"Item {item.item_id!r}: entity {item.entity_name!r} is not in the graph")
            v = graph.entity_index[item.entity_name]
            if v in self.item_of_entity:
                raise DataError(
                    f"Entity {item.entity_name!r} is aligned to both "
                    f"{self.item_of_entity[v]!r} and {item.item_id!r}"
                )
            self.entity_of[item.item_id] = v
            self.item_of_entity[v] = item.item_id
        return self


def load_catalog(lines: Iterable[str], graph: Optional[KnowledgeGraph] = None, source: str = "items") -> ItemCatalog:
    """
    Parse catalog JSON-lines and optionally bind them to a graph.

    Args:
        lines: JSON-lines text
        graph: If given, item entities are resolved to ids
        source: File name for error messages

    Returns:
        ItemCatalog: Catalog with normalized attribute sets

    Raises:
        DataError: On malformed records or duplicate item ids
    """
    items: Dict[str, CatalogItem] = {}
    for line_number, record in iter_jsonl(lines, source):
        item_id = str(record.get("item_id", "")).strip()
        entity_name = str(record.get("entity", item_id)).strip()
        if not item_id or not entity_name:
            raise DataError(f"{source}:{line_number}: item_id and entity are required")
        if item_id in items:
            raise DataError(f"{source}:{line_number}: duplicate item_id {item_id!r}")
        attributes = record.get("attributes", []) or []
        if not isinstance(attributes, list):
            raise DataError(f"{source}:{line_number}: attributes must be a list")
        items[item_id] = CatalogItem(
            item_id=item_id,
            entity_name=entity_name,
            title=str(record.get("title") or entity_name),
            attributes=frozenset(normalize_feature(a) for a in attributes if str(a).strip()),
        )

    catalog = ItemCatalog(items=items)
    if graph is not None:
        catalog.bind(graph)
    logger.info(f"Loaded catalog with {len(items)} items")
    return catalog


def item_features(cat: ItemCatalog, i: str) -> FrozenSet[str]:
    """
    Ground-truth attribute set of an item, the factual reference for F-EHR.

    Raises:
        UnknownItemError: If i is not catalogued
    """
    return cat.get(i).attributes


def catalog_entity_names(lines: Iterable[str]) -> List[str]:
    """Entity names referenced by a catalog, so isolated items still get graph ids."""
    return [str(r.get("entity", r.get("item_id", ""))).strip() for _, r in iter_jsonl(lines, "items")]
