"""
Workspace operations: building the index and opening everything a
retrieval or explanation request needs.
"""
import logging
import time
from dataclasses import dataclass
from pathlib import Path
from typing import Dict, Optional

import numpy as np

from kgexplain.config.settings import EngineConfig
from kgexplain.embedding.aggregate import aggregate_structure
from kgexplain.embedding.clustering import ClusterModel, kmeans_fit
from kgexplain.embedding.store import EmbeddingStore, init_embeddings
from kgexplain.kg.catalog import ItemCatalog, catalog_entity_names, load_catalog
from kgexplain.kg.graph import KnowledgeGraph, load_graph
from kgexplain.kg.history import UserHistory, load_histories
from kgexplain.errors import SnapshotError
from kgexplain.kg.index_io import MANIFEST, load_index, read_manifest, save_index
from kgexplain.retrieval.intent import load_value_matrix
from kgexplain.utils.io import read_lines

logger = logging.getLogger(__name__)


@dataclass
class IndexSummary:
    index_dir: Path
    entities: int
    relations: int
    triples: int
    seconds: float


@dataclass
class Workspace:
    config: EngineConfig
    graph: KnowledgeGraph
    catalog: ItemCatalog
    histories: Dict[str, UserHistory]
    store: EmbeddingStore
    clusters: ClusterModel
    value_matrix: Optional[np.ndarray] = None


class WorkspaceOperations:
    """Index building and loading for a validated EngineConfig."""

    @staticmethod
    def build_graph(config: EngineConfig) -> KnowledgeGraph:
        item_lines = read_lines(config.data.items)
        return load_graph(
            read_lines(config.data.triples),
            extra_entities=catalog_entity_names(item_lines),
            source=config.data.triples,
        )

    @staticmethod
    def build_index(config: EngineConfig, index_dir: Optional[str] = None) -> IndexSummary:
        """
        Load the graph, embed, aggregate, cluster and write the index snapshot.

        Returns:
            IndexSummary: Counts and wall time
        """
        started = time.perf_counter()
        emb = config.embedding
        graph = WorkspaceOperations.build_graph(config)
        load_catalog(read_lines(config.data.items), graph, source=config.data.items)

        store = init_embeddings(
            graph,
            backend=emb.backend,
            dim=emb.dim,
            seed=emb.seed,
            path=emb.path,
            url=config.encoder_url,
            token=config.api_token,
            timeout=config.generation.timeout,
        )
        store = aggregate_structure(graph, store, layers=emb.layers)
        clusters = kmeans_fit(store, k=emb.clusters, seed=emb.seed)

        out = save_index(index_dir or config.data.index_dir, graph, store, clusters,
                         extra={"index_hash": config.index_hash()})
        seconds = time.perf_counter() - started
        logger.info(f"Index built in {seconds:.2f}s")
        return IndexSummary(out, graph.num_entities, graph.num_relations, len(graph.triples), seconds)

    @staticmethod
    def open(config: EngineConfig, build_if_missing: bool = True) -> Workspace:
        """
        Open the index named by the config, building it first if absent.

        An index built from other inputs or [embedding] settings is stale:
        it is rebuilt when `build_if_missing` is set and refused otherwise.

        Raises:
            SnapshotError: If an existing index has the wrong magic or version,
                           or is stale and may not be rebuilt
            DataError: On unreadable catalog or history files
        """
        index_dir = Path(config.data.index_dir)
        if not (index_dir / MANIFEST).is_file():
            if build_if_missing:
                logger.info(f"No index at {index_dir}; building it")
                WorkspaceOperations.build_index(config)
        else:
            expected = config.index_hash()
            found = read_manifest(index_dir).get("index_hash")
            if found != expected:
                if not build_if_missing:
                    raise SnapshotError(
                        f"Index {index_dir} was built from different inputs or [embedding] settings "
                        f"({found} != {expected}); run 'kgexplain index' again"
                    )
                logger.warning(f"Index {index_dir} is stale ({found} != {expected}); rebuilding it")
                WorkspaceOperations.build_index(config)

        bundle = load_index(index_dir, encoder_url=config.encoder_url, token=config.api_token)
        catalog = load_catalog(read_lines(config.data.items), bundle.graph, source=config.data.items)
        histories = load_histories(
            read_lines(config.data.users),
            h_max=config.retrieval.history_length,
            source=config.data.users,
        )
        value_matrix = None
        if config.data.value_matrix:
            value_matrix = load_value_matrix(config.data.value_matrix, bundle.store.dim)

        return Workspace(
            config=config,
            graph=bundle.graph,
            catalog=catalog,
            histories=histories,
            store=bundle.store,
            clusters=bundle.clusters,
            value_matrix=value_matrix,
        )
