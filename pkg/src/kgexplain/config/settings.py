"""
Engine configuration: TOML file + environment + command-line overrides.

Values are read from a TOML file into a frozen EngineConfig. Backend URLs
and tokens may also come from a local .env file or the process
environment; when the Streamlit explorer is running, its secrets are
consulted first.
"""
import hashlib
import json
import logging
import os
import sys
from dataclasses import asdict, dataclass, field, fields, replace
from pathlib import Path
from typing import Any, Dict, Optional

from dotenv import load_dotenv

if sys.version_info >= (3, 11):
    import tomllib
else:  # pragma: no cover
    import tomli as tomllib

from kgexplain.config import constants as C
from kgexplain.errors import ConfigError
from kgexplain.retrieval.specificity import SpecificityWeights
from kgexplain.utils.hashing import file_sha256

# Load environment variables from .env (local development)
load_dotenv()

logger = logging.getLogger(__name__)


def _get_config_value(key: str) -> Optional[str]:
    """
    Get a configuration value from Streamlit secrets or environment variables.
    Streamlit secrets are only consulted when the explorer app is running.
    """
    if "streamlit" in sys.modules:
        try:
            import streamlit as st
            if hasattr(st, "secrets") and "kgexplain" in st.secrets:
                value = st.secrets["kgexplain"].get(key)
                if value:
                    return value
        except (ImportError, KeyError, AttributeError, FileNotFoundError):
            pass

    return os.getenv(key)


@dataclass(frozen=True)
class DataPaths:
    triples: str = "data/toy/triples.tsv"
    items: str = "data/toy/items.jsonl"
    users: str = "data/toy/users.jsonl"
    corpus: Optional[str] = None
    index_dir: str = "build/index"
    runs_dir: str = "runs"
    value_matrix: Optional[str] = None


@dataclass(frozen=True)
class EmbeddingSettings:
    backend: str = "hash"
    dim: int = C.DEFAULT_DIM
    seed: int = C.DEFAULT_SEED
    path: Optional[str] = None
    url: Optional[str] = None
    layers: int = C.DEFAULT_LAYERS
    clusters: int = C.DEFAULT_CLUSTERS


@dataclass(frozen=True)
class RetrievalSettings:
    strategy: str = "preference"
    max_hops: int = C.DEFAULT_MAX_HOPS
    cap: int = C.DEFAULT_CANDIDATE_CAP
    gamma: float = C.DEFAULT_GAMMA
    top_n: int = C.DEFAULT_TOP_N
    temperature: float = C.DEFAULT_INTENT_TEMPERATURE
    history_length: int = C.DEFAULT_HISTORY_LENGTH


@dataclass(frozen=True)
class GenerationSettings:
    backend: str = "stub"
    url: Optional[str] = None
    token: Optional[str] = None
    max_tokens: int = C.DEFAULT_MAX_TOKENS
    temperature: float = C.DEFAULT_GEN_TEMPERATURE
    seed: int = C.DEFAULT_SEED
    timeout: float = C.DEFAULT_HTTP_TIMEOUT
    max_in_flight: int = C.DEFAULT_MAX_IN_FLIGHT
    system_instruction: Optional[str] = None


@dataclass(frozen=True)
class EvaluationSettings:
    tau: float = C.DEFAULT_TAU
    encoder_backend: Optional[str] = None


@dataclass(frozen=True)
class AblationFlags:
    no_kg: bool = False
    no_pruning: bool = False
    no_spec: bool = False
    no_mmr: bool = False
    only_1hop: bool = False

    def active(self) -> list:
        return [name for name in C.ABLATION_FLAGS if C.is_ablation_enabled(self, name)]


@dataclass(frozen=True)
class EngineConfig:
    data: DataPaths = field(default_factory=DataPaths)
    embedding: EmbeddingSettings = field(default_factory=EmbeddingSettings)
    retrieval: RetrievalSettings = field(default_factory=RetrievalSettings)
    specificity: SpecificityWeights = field(default_factory=SpecificityWeights)
    generation: GenerationSettings = field(default_factory=GenerationSettings)
    evaluation: EvaluationSettings = field(default_factory=EvaluationSettings)
    ablation: AblationFlags = field(default_factory=AblationFlags)
    jobs: Optional[int] = None

    def validate(self) -> "EngineConfig":
        """
        Check every configuration invariant before any work starts.

        Returns:
            EngineConfig: self, for chaining

        Raises:
            ConfigError: On the first violated invariant
        """
        self.specificity.validate()

        emb = self.embedding
        if emb.backend not in C.EMBEDDING_BACKENDS:
            raise ConfigError(f"Unknown embedding backend: {emb.backend}")
        if emb.dim < 2:
            raise ConfigError(f"Embedding dim must be >= 2, got {emb.dim}")
        if emb.layers < 0:
            raise ConfigError(f"Aggregation layers must be >= 0, got {emb.layers}")
        if emb.clusters < 2:
            raise ConfigError(f"Cluster count must be >= 2, got {emb.clusters}")
        if emb.backend == "file" and not emb.path:
            raise ConfigError("File embedding backend requires embedding.path")
        if emb.backend == "http" and not self.encoder_url:
            raise ConfigError(f"HTTP embedding backend requires embedding.url or {C.ENV_ENCODER_URL}")

        ret = self.retrieval
        if ret.strategy not in C.RETRIEVAL_STRATEGIES:
            raise ConfigError(f"Unknown retrieval strategy: {ret.strategy}")
        if not 1 <= ret.max_hops <= 3:
            raise ConfigError(f"max_hops must be in 1..3, got {ret.max_hops}")
        if not 0.0 <= ret.gamma <= 1.0:
            raise ConfigError(f"gamma must be in [0, 1], got {ret.gamma}")
        if ret.top_n < 1:
            raise ConfigError(f"top_n must be >= 1, got {ret.top_n}")
        if ret.cap < 1:
            raise ConfigError(f"Candidate cap must be >= 1, got {ret.cap}")
        if ret.temperature <= 0:
            raise ConfigError(f"Intent temperature must be > 0, got {ret.temperature}")
        if ret.history_length < 1:
            raise ConfigError(f"history_length must be >= 1, got {ret.history_length}")

        gen = self.generation
        if gen.backend not in C.GENERATION_BACKENDS:
            raise ConfigError(f"Unknown generation backend: {gen.backend}")
        if gen.backend == "http" and not self.completion_url:
            raise ConfigError(f"HTTP generation backend requires generation.url or {C.ENV_COMPLETION_URL}")
        if gen.max_tokens < 1 or gen.timeout <= 0 or gen.max_in_flight < 1:
            raise ConfigError("Generation max_tokens, timeout and max_in_flight must be positive")

        ev = self.evaluation
        if not 0.0 <= ev.tau <= 1.0:
            raise ConfigError(f"tau must be in [0, 1], got {ev.tau}")
        if ev.encoder_backend is not None and ev.encoder_backend != emb.backend:
            raise ConfigError(
                f"Evaluation encoder '{ev.encoder_backend}' differs from embedding backend "
                f"'{emb.backend}'; proxy scores need one encoder"
            )

        if self.jobs is not None and self.jobs < 1:
            raise ConfigError(f"jobs must be >= 1, got {self.jobs}")
        return self

    @property
    def encoder_url(self) -> Optional[str]:
        return self.embedding.url or _get_config_value(C.ENV_ENCODER_URL)

    @property
    def completion_url(self) -> Optional[str]:
        return self.generation.url or _get_config_value(C.ENV_COMPLETION_URL)

    @property
    def api_token(self) -> Optional[str]:
        return self.generation.token or _get_config_value(C.ENV_API_TOKEN)

    @property
    def workers(self) -> int:
        return self.jobs or os.cpu_count() or 1

    def config_hash(self) -> str:
        """
        Stable short hash of everything that changes results.

        Input files enter by content, not by path; output locations,
        endpoints, secrets and parallelism are left out. The same settings
        and inputs give the same hash from any directory.
        """
        payload = _hashable(asdict(self))
        payload.pop("jobs", None)
        return _digest(payload)

    def index_hash(self) -> str:
        """Hash of the inputs and [embedding] settings an index snapshot is built from."""
        payload = _hashable(asdict(self))
        return _digest({
            "embedding": payload["embedding"],
            "triples": payload["data"]["triples"],
            "items": payload["data"]["items"],
        })

    def with_overrides(self, overrides: Dict[str, Dict[str, Any]]) -> "EngineConfig":
        """
        Return a copy with section values replaced. None values are ignored,
        so unset command-line flags never clobber the file.
        """
        updates: Dict[str, Any] = {}
        for section, values in overrides.items():
            if section == "jobs":
                if values is not None:
                    updates["jobs"] = values
                continue
            current = getattr(self, section)
            clean = {k: v for k, v in values.items() if v is not None}
            if clean:
                updates[section] = _replace_checked(current, section, clean)
        return replace(self, **updates)


_SECTIONS = {
    "data": DataPaths,
    "embedding": EmbeddingSettings,
    "retrieval": RetrievalSettings,
    "specificity": SpecificityWeights,
    "generation": GenerationSettings,
    "evaluation": EvaluationSettings,
    "ablation": AblationFlags,
}

_PATH_KEYS = {
    "data": ("triples", "items", "users", "corpus", "index_dir", "runs_dir", "value_matrix"),
    "embedding": ("path",),
    "generation": ("system_instruction",),
}


_UNHASHED_KEYS = {
    "data": ("index_dir", "runs_dir"),
    "embedding": ("url",),
    "generation": ("url", "token"),
}


def _hashable(payload: Dict[str, Any]) -> Dict[str, Any]:
    for section, keys in _UNHASHED_KEYS.items():
        for key in keys:
            payload[section].pop(key, None)
    for section, keys in _PATH_KEYS.items():
        for key in keys:
            value = payload[section].get(key)
            if not value:
                continue
            if Path(value).is_file():
                payload[section][key] = file_sha256(value)
            elif key != "system_instruction":  # literal instruction text stays as is
                payload[section][key] = Path(value).name
    return payload


def _digest(payload: Dict[str, Any]) -> str:
    canonical = json.dumps(payload, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(canonical.encode("utf-8")).hexdigest()[:10]


def _replace_checked(current, section: str, values: Dict[str, Any]):
    known = {f.name for f in fields(current)}
    unknown = sorted(set(values) - known)
    if unknown:
        raise ConfigError(f"Unknown key(s) in [{section}]: {', '.join(unknown)}")
    try:
        return replace(current, **values)
    except TypeError as e:
        raise ConfigError(f"Invalid [{section}] values: {e}") from e


def _resolve_paths(section: str, values: Dict[str, Any], base_dir: Path) -> Dict[str, Any]:
    resolved = dict(values)
    for key in _PATH_KEYS.get(section, ()):
        value = resolved.get(key)
        if not value or Path(value).is_absolute():
            continue
        candidate = base_dir / value
        # system_instruction may be literal text rather than a file name
        if key == "system_instruction" and not candidate.is_file():
            continue
        resolved[key] = str(candidate.resolve())
    return resolved


def load_config(path: Optional[str] = None) -> EngineConfig:
    """
    Load an EngineConfig from a TOML file.

    Relative data paths in the file are resolved against the file's
    directory. Without a path the built-in defaults are used.

    Args:
        path: Path to the TOML configuration file

    Returns:
        EngineConfig: Unvalidated configuration (call validate())

    Raises:
        ConfigError: If the file is missing, unparsable or has unknown keys
    """
    config = EngineConfig()
    if path is None:
        return config

    config_path = Path(path)
    if not config_path.is_file():
        raise ConfigError(f"Config file not found: {config_path}")

    try:
        with open(config_path, "rb") as f:
            raw = tomllib.load(f)
    except tomllib.TOMLDecodeError as e:
        raise ConfigError(f"Cannot parse {config_path}: {e}") from e

    updates: Dict[str, Any] = {}
    for section, values in raw.items():
        if section == "jobs":
            updates["jobs"] = values
            continue
        if section not in _SECTIONS:
            raise ConfigError(f"Unknown config section [{section}] in {config_path}")
        if not isinstance(values, dict):
            raise ConfigError(f"Config section [{section}] must be a table")
        values = _resolve_paths(section, values, config_path.parent)
        updates[section] = _replace_checked(getattr(config, section), section, values)

    logger.debug(f"Loaded configuration from {config_path}")
    return replace(config, **updates)
