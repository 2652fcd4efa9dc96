"""
Index snapshot persistence.

An index directory holds the graph, base and aggregated vectors and the
cluster model as plain text files next to a manifest with a magic header
and format version. Floats are written with their shortest round-trip
representation, so rebuilding from unchanged inputs reproduces every file
byte for byte.
"""
import json
import logging
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Any, Dict, Optional, Union

import numpy as np

from kgexplain.config.constants import ENV_ENCODER_URL, INDEX_FORMAT_VERSION, INDEX_MAGIC
from kgexplain.embedding.clustering import ClusterModel
from kgexplain.embedding.encoders import HttpEncoder
from kgexplain.embedding.store import (
    EmbeddingStore,
    format_vector,
    load_vector_file,
    store_from_arrays,
    vectors_to_lines,
)
from kgexplain.errors import ConfigError, DataError, SnapshotError
from kgexplain.kg.graph import KnowledgeGraph, load_graph
from kgexplain.utils.io import read_lines, write_json, write_text

logger = logging.getLogger(__name__)

MANIFEST = "manifest.json"
ENTITIES = "entities.txt"
RELATIONS = "relations.txt"
TRIPLES = "triples.tsv"
BASE_VECTORS = "base_vectors.tsv"
RELATION_VECTORS = "relation_vectors.tsv"
AGGREGATED_VECTORS = "aggregated_vectors.tsv"
CLUSTERS = "clusters.json"


@dataclass
class IndexBundle:
    graph: KnowledgeGraph
    store: EmbeddingStore
    clusters: ClusterModel
    manifest: Dict[str, Any] = field(default_factory=dict)


def save_index(
    index_dir: Union[str, Path],
    graph: KnowledgeGraph,
    store: EmbeddingStore,
    clusters: ClusterModel,
    extra: Optional[Dict[str, Any]] = None,
) -> Path:
    """
    Write an index snapshot.

    Args:
        index_dir: Target directory (created if missing)
        graph: Loaded knowledge graph
        store: Store with aggregated vectors
        clusters: Fitted cluster model
        extra: Additional manifest fields (e.g. config hash)

    Returns:
        Path: The index directory
    """
    out = Path(index_dir)
    out.mkdir(parents=True, exist_ok=True)

    write_text(out / ENTITIES, "".join(f"{n}\n" for n in graph.entity_names))
    write_text(out / RELATIONS, "".join(f"{n}\n" for n in graph.relation_names))
    write_text(out / TRIPLES, "".join(f"{line}\n" for line in graph.to_lines()))
    write_text(out / BASE_VECTORS, "\n".join(vectors_to_lines(graph.entity_names, store.entity_vectors)) + "\n")
    write_text(
        out / RELATION_VECTORS,
        "\n".join(vectors_to_lines(graph.relation_names, store.relation_vectors, store.relation_mask)) + "\n",
    )
    write_text(out / AGGREGATED_VECTORS, "\n".join(vectors_to_lines(graph.entity_names, store.aggregated)) + "\n")
    write_json(out / CLUSTERS, {
        "k": clusters.k,
        "iterations": clusters.iterations,
        "assignment": [int(c) for c in clusters.assignment],
        "centroids": [format_vector(c) for c in clusters.centroids],
    })

    manifest = {
        "magic": INDEX_MAGIC,
        "format_version": INDEX_FORMAT_VERSION,
        "entities": graph.num_entities,
        "relations": graph.num_relations,
        "triples": len(graph.triples),
        "embedding": {"backend": store.backend, "dim": store.dim, "seed": store.seed, "layers": store.layers},
        "clusters": clusters.k,
    }
    manifest.update(extra or {})
    write_json(out / MANIFEST, manifest)
    logger.info(f"Saved index to {out}")
    return out


def read_manifest(index_dir: Union[str, Path]) -> Dict[str, Any]:
    index_dir = Path(index_dir)
    path = index_dir / MANIFEST
    if not path.is_file():
        raise SnapshotError(f"No index manifest at {path}; run 'kgexplain index' first")
    try:
        manifest = json.loads("\n".join(read_lines(path)))
    except ValueError as e:
        raise SnapshotError(f"Corrupt manifest {path}: {e}") from e
    if manifest.get("magic") != INDEX_MAGIC:
        raise SnapshotError(f"{path}: not a kgexplain index (magic {manifest.get('magic')!r})")
    if manifest.get("format_version") != INDEX_FORMAT_VERSION:
        raise SnapshotError(
            f"{path}: index format version {manifest.get('format_version')} is not supported "
            f"(expected {INDEX_FORMAT_VERSION}); rebuild the index"
        )
    return manifest


def _matrix(names, vectors: Dict[str, np.ndarray], dim: int, what: str) -> np.ndarray:
    missing = [n for n in names if n not in vectors]
    if missing:
        raise DataError(f"Index {what} lacks {len(missing)} vector(s), e.g. {missing[0]!r}")
    return np.array([vectors[n] for n in names]).reshape(-1, dim)


def load_index(
    index_dir: Union[str, Path],
    encoder_url: Optional[str] = None,
    token: Optional[str] = None,
) -> IndexBundle:
    """
    Load an index snapshot written by save_index.

    Raises:
        SnapshotError: On a missing manifest, wrong magic or version
        DataError: On inconsistent files
        ConfigError: If the index needs the http encoder and no URL is given
    """
    root = Path(index_dir)
    manifest = read_manifest(root)

    graph = load_graph(read_lines(root / TRIPLES), extra_entities=read_lines(root / ENTITIES), source=str(root / TRIPLES))
    if graph.num_entities != manifest["entities"] or len(graph.triples) != manifest["triples"]:
        raise DataError(f"Index {root} is inconsistent with its manifest")

    emb = manifest["embedding"]
    dim = int(emb["dim"])
    _, base = load_vector_file(root / BASE_VECTORS)
    _, rels = load_vector_file(root / RELATION_VECTORS)
    _, aggregated = load_vector_file(root / AGGREGATED_VECTORS)

    store = store_from_arrays(
        _matrix(graph.entity_names, base, dim, "base vectors"),
        np.array([rels.get(n, np.zeros(dim)) for n in graph.relation_names]).reshape(-1, dim),
        seed=int(emb["seed"]),
        backend=emb["backend"],
    )
    store = replace(
        store,
        relation_mask=np.array([n in rels for n in graph.relation_names], dtype=bool),
        aggregated=_matrix(graph.entity_names, aggregated, dim, "aggregated vectors"),
        layers=int(emb.get("layers", 0)),
    )
    if store.backend == "http":
        if not encoder_url:
            raise ConfigError(
                f"Index {root} was embedded with the http encoder; feature text needs the same "
                f"encoder, so set embedding.url or {ENV_ENCODER_URL}"
            )
        store = replace(store, text_encoder=HttpEncoder(encoder_url, dim=dim, token=token))

    raw = json.loads("\n".join(read_lines(root / CLUSTERS)))
    clusters = ClusterModel(
        centroids=np.array([[float(x) for x in c.split(",")] for c in raw["centroids"]]),
        assignment=np.array(raw["assignment"], dtype=int),
        iterations=int(raw.get("iterations", 0)),
    )
    if clusters.assignment.shape[0] != graph.num_entities:
        raise DataError(f"Cluster assignment in {root} does not cover every entity")

    logger.info(f"Loaded index from {root}: {graph.num_entities} entities, {len(graph.triples)} triples")
    return IndexBundle(graph=graph, store=store, clusters=clusters, manifest=manifest)
