"""
Embedding store: base entity/relation vectors, aggregated entity vectors and
the text encoder that serves features and linearized paths.
"""
import logging
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Dict, Iterable, List, Optional, Sequence, Tuple, Union

import numpy as np

from kgexplain.config.constants import DEFAULT_DIM, DEFAULT_HTTP_TIMEOUT, DEFAULT_SEED, ZERO_NORM
from kgexplain.embedding.encoders import HashTextEncoder, HttpEncoder, hash_vector
from kgexplain.errors import ConfigError, DataError, DimensionMismatchError, MissingEmbeddingError
from kgexplain.kg.graph import KnowledgeGraph
from kgexplain.utils.io import read_lines

logger = logging.getLogger(__name__)


def normalize(vec: np.ndarray) -> np.ndarray:
    """L2-normalize; vectors with norm below 1e-12 are returned unchanged."""
    norm = np.linalg.norm(vec)
    return vec / norm if norm >= ZERO_NORM else vec


def normalize_rows(matrix: np.ndarray) -> np.ndarray:
    norms = np.linalg.norm(matrix, axis=1, keepdims=True)
    safe = np.where(norms >= ZERO_NORM, norms, 1.0)
    return matrix / safe


def cosine(a: np.ndarray, b: np.ndarray) -> float:
    """
    Cosine similarity in [-1, 1].

    Returns 0.0 when either vector has norm below 1e-12.

    Raises:
        DimensionMismatchError: If the vectors differ in dimension
    """
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    if a.shape != b.shape:
        raise DimensionMismatchError(f"Cannot compare vectors of shape {a.shape} and {b.shape}")
    na = np.linalg.norm(a)
    nb = np.linalg.norm(b)
    if na < ZERO_NORM or nb < ZERO_NORM:
        return 0.0
    return float(np.clip(np.dot(a, b) / (na * nb), -1.0, 1.0))


def cosine_matrix(rows: np.ndarray, query: np.ndarray) -> np.ndarray:
    """Cosine of every row against one query vector, zero-norm convention included."""
    if rows.shape[1] != query.shape[0]:
        raise DimensionMismatchError(f"Cannot compare rows of dim {rows.shape[1]} with dim {query.shape[0]}")
    qn = np.linalg.norm(query)
    rn = np.linalg.norm(rows, axis=1)
    out = np.zeros(rows.shape[0])
    ok = (rn >= ZERO_NORM) & (qn >= ZERO_NORM)
    if np.any(ok):
        out[ok] = rows[ok] @ query / (rn[ok] * qn)
    return np.clip(out, -1.0, 1.0)


@dataclass
class EmbeddingStore:
    """
    Dense vectors indexed by graph entity / relation id.

    `relation_mask[r]` is False when relation r has no vector (possible with
    the file backend); aggregation refuses such graphs.
    """
    dim: int
    backend: str
    seed: int
    entity_vectors: np.ndarray
    relation_vectors: np.ndarray
    relation_mask: np.ndarray
    aggregated: np.ndarray
    text_encoder: Union[HashTextEncoder, HttpEncoder] = field(repr=False)
    layers: int = 0

    def base(self, v: int) -> np.ndarray:
        return self.entity_vectors[v]

    def entity(self, v: int) -> np.ndarray:
        """Aggregated (structure-aware) vector of entity v."""
        if not 0 <= v < self.aggregated.shape[0]:
            raise MissingEmbeddingError(f"No vector for entity id {v}")
        return self.aggregated[v]

    def relation(self, r: int) -> np.ndarray:
        """Unit-normalized relation vector."""
        if not 0 <= r < self.relation_vectors.shape[0] or not self.relation_mask[r]:
            raise MissingEmbeddingError(f"No vector for relation id {r}")
        return normalize(self.relation_vectors[r])

    def scaled(self, factor: float) -> "EmbeddingStore":
        """Copy with every base vector multiplied by factor; aggregation is reset."""
        entity_vectors = self.entity_vectors * factor
        return replace(
            self,
            entity_vectors=entity_vectors,
            relation_vectors=self.relation_vectors * factor,
            aggregated=normalize_rows(entity_vectors),
            layers=0,
        )


# ---------------------------------------------------------------------------
# Embedding file codec: header "dim=<d>", then "name<TAB>v1,v2,...,vd"
# ---------------------------------------------------------------------------

def format_vector(vec: np.ndarray) -> str:
    return ",".join(repr(float(x)) for x in vec)


def vectors_to_lines(names: Sequence[str], matrix: np.ndarray, mask: Optional[np.ndarray] = None) -> List[str]:
    lines = [f"dim={matrix.shape[1]}"]
    for i, name in enumerate(names):
        if mask is not None and not mask[i]:
            continue
        lines.append(f"{name}\t{format_vector(matrix[i])}")
    return lines


def parse_vector_lines(lines: Iterable[str], source: str = "<vectors>") -> Tuple[int, Dict[str, np.ndarray]]:
    """
    Parse an embedding file.

    Returns:
        Tuple of (dim, name -> vector)

    Raises:
        DataError: On a missing header or malformed line
        DimensionMismatchError: If any vector's length differs from the header
    """
    iterator = iter(lines)
    header = next(iterator, "").strip()
    if not header.startswith("dim="):
        raise DataError(f"{source}: first line must be 'dim=<d>', got {header[:40]!r}")
    try:
        dim = int(header[4:])
    except ValueError as e:
        raise DataError(f"{source}: invalid dimension header {header!r}") from e

    vectors: Dict[str, np.ndarray] = {}
    for line_number, line in enumerate(iterator, start=2):
        if not line.strip():
            continue
        name, sep, values = line.rstrip("\n").partition("\t")
        if not sep:
            raise DataError(f"{source}:{line_number}: expected 'name<TAB>v1,...,vd'")
        try:
            vec = np.array([float(x) for x in values.split(",")], dtype=float)
        except ValueError as e:
            raise DataError(f"{source}:{line_number}: non-numeric component") from e
        if vec.shape[0] != dim:
            raise DimensionMismatchError(
                f"{source}:{line_number}: vector for {name!r} has {vec.shape[0]} components, header says {dim}"
            )
        if not np.all(np.isfinite(vec)):
            raise DataError(f"{source}:{line_number}: non-finite component in {name!r}")
        vectors[name] = vec
    return dim, vectors


def load_vector_file(path: Union[str, Path]) -> Tuple[int, Dict[str, np.ndarray]]:
    return parse_vector_lines(read_lines(path), source=str(path))


# ---------------------------------------------------------------------------
# Store construction
# ---------------------------------------------------------------------------

def _hash_store(g: KnowledgeGraph, dim: int, seed: int) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    entities = np.array([hash_vector(n, dim, seed, "entity") for n in g.entity_names])
    relations = np.array([hash_vector(n, dim, seed, "relation") for n in g.relation_names]).reshape(-1, dim)
    return entities, relations, np.ones(g.num_relations, dtype=bool)


def _file_store(g: KnowledgeGraph, path: str, dim: Optional[int]) -> Tuple[int, np.ndarray, np.ndarray, np.ndarray]:
    file_dim, vectors = load_vector_file(path)
    if dim is not None and dim != file_dim:
        logger.info(f"Embedding file {path} has dim={file_dim}; overriding configured dim={dim}")
    missing = [n for n in g.entity_names if n not in vectors]
    if missing:
        raise MissingEmbeddingError(
            f"Embedding file {path} lacks {len(missing)} entities, e.g. {missing[0]!r}"
        )
    entities = np.array([vectors[n] for n in g.entity_names])
    mask = np.array([n in vectors for n in g.relation_names], dtype=bool)
    relations = np.array([vectors.get(n, np.zeros(file_dim)) for n in g.relation_names]).reshape(-1, file_dim)
    if not mask.all():
        logger.warning(f"Embedding file {path} lacks {int((~mask).sum())} relation vector(s)")
    return file_dim, entities, relations, mask


def init_embeddings(
    g: KnowledgeGraph,
    backend: str = "hash",
    dim: int = DEFAULT_DIM,
    seed: int = DEFAULT_SEED,
    path: Optional[str] = None,
    url: Optional[str] = None,
    token: Optional[str] = None,
    timeout: float = DEFAULT_HTTP_TIMEOUT,
) -> EmbeddingStore:
    """
    Create base vectors for every entity and relation of a graph.

    Args:
        g: Knowledge graph
        backend: 'hash' (seeded, deterministic), 'file' (embedding file) or
                 'http' (encoder endpoint, fetched once and cached)
        dim: Vector dimension (the file backend uses the file's dimension)
        seed: Seed of the hash backend and of hash token vectors
        path: Embedding file for the file backend
        url: Encoder endpoint for the http backend
        token: Optional bearer token for the endpoint
        timeout: HTTP timeout in seconds

    Returns:
        EmbeddingStore: Store whose aggregated vectors equal the normalized base

    Raises:
        ConfigError: Unknown backend or dim < 2
        DimensionMismatchError: Mixed dimensions in the file or endpoint
        EncoderError: Endpoint unreachable
    """
    if dim < 2:
        raise ConfigError(f"Embedding dim must be >= 2, got {dim}")

    if backend == "hash":
        entities, relations, mask = _hash_store(g, dim, seed)
        text_encoder = HashTextEncoder(dim, seed)
    elif backend == "file":
        if not path:
            raise ConfigError("File backend requires an embedding path")
        dim, entities, relations, mask = _file_store(g, path, dim)
        text_encoder = HashTextEncoder(dim, seed)
    elif backend == "http":
        if not url:
            raise ConfigError("HTTP backend requires an encoder URL")
        text_encoder = HttpEncoder(url, dim=None, token=token, timeout=timeout)
        entities = text_encoder.encode(g.entity_names)
        relations = text_encoder.encode(g.relation_names).reshape(-1, text_encoder.dim)
        dim = text_encoder.dim
        mask = np.ones(g.num_relations, dtype=bool)
    else:
        raise ConfigError(f"Unknown embedding backend: {backend}")

    logger.info(f"Initialized {backend} embeddings: {entities.shape[0]} entities, dim={dim}")
    return EmbeddingStore(
        dim=dim,
        backend=backend,
        seed=seed,
        entity_vectors=entities,
        relation_vectors=relations,
        relation_mask=mask,
        aggregated=normalize_rows(entities),
        text_encoder=text_encoder,
    )


def store_from_arrays(
    entity_vectors: np.ndarray,
    relation_vectors: np.ndarray,
    seed: int = DEFAULT_SEED,
    backend: str = "file",
) -> EmbeddingStore:
    """Build a store from explicit matrices (index reload, tests, external tools)."""
    entity_vectors = np.asarray(entity_vectors, dtype=float)
    relation_vectors = np.asarray(relation_vectors, dtype=float).reshape(-1, entity_vectors.shape[1])
    dim = entity_vectors.shape[1]
    return EmbeddingStore(
        dim=dim,
        backend=backend,
        seed=seed,
        entity_vectors=entity_vectors,
        relation_vectors=relation_vectors,
        relation_mask=np.ones(relation_vectors.shape[0], dtype=bool),
        aggregated=normalize_rows(entity_vectors),
        text_encoder=HashTextEncoder(dim, seed),
    )


def encode_text(store: EmbeddingStore, text: str) -> np.ndarray:
    """
    Encode a feature or free text with the store's text encoder.

    Raises:
        ValueError: On empty text
        EncoderError: If the http encoder fails after one retry
    """
    if not text or not text.strip():
        raise ValueError("Cannot encode empty text")
    return store.text_encoder.encode([text])[0]
