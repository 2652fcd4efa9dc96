"""
Evidence retrieval pipeline: intent, candidate enumeration, scoring and
selection for one (user, target) pair, with ablation switches and a flat
vector-similarity baseline.
"""
import logging
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import List, Optional, Tuple

from kgexplain.config.settings import EngineConfig
from kgexplain.embedding.path_encoder import encode_path
from kgexplain.embedding.store import cosine
from kgexplain.errors import DataError
from kgexplain.kg.history import get_history
from kgexplain.retrieval.intent import IntentVector, compute_intent
from kgexplain.retrieval.mmr import mmr_select
from kgexplain.retrieval.paths import PathCandidates, ReasoningPath, enumerate_paths
from kgexplain.retrieval.scoring import PathScore, score_path
from kgexplain.retrieval.specificity import SpecificityContext
from kgexplain.workspace import Workspace

logger = logging.getLogger(__name__)

ScoredPath = Tuple[ReasoningPath, PathScore]


@dataclass
class RetrievalResult:
    user_id: str
    target: str
    selected: List[ScoredPath]
    candidates: int
    truncated: bool
    strategy: str
    ablations: List[str] = field(default_factory=list)
    gamma: float = 0.0
    intent: Optional[IntentVector] = None
    latency_ms: float = 0.0

    @property
    def paths(self) -> List[ReasoningPath]:
        return [p for p, _ in self.selected]


class EvidenceRetriever:
    """
    Selects evidence paths for (user, target) pairs over an opened workspace.

    Ablations (from config.ablation):
        no_kg       no evidence at all
        no_pruning  relevance-only scores, plain top-N
        no_spec     every node maximally specific
        no_mmr      plain top-N by score
        only_1hop   enumerate 1-hop attribute edges only
    """

    def __init__(self, workspace: Workspace, config: Optional[EngineConfig] = None):
        self.ws = workspace
        self.config = config or workspace.config

    @property
    def effective_gamma(self) -> float:
        ab = self.config.ablation
        if ab.no_pruning or ab.no_mmr or self.config.retrieval.strategy == "flat":
            return 1.0
        return self.config.retrieval.gamma

    @property
    def effective_max_hops(self) -> int:
        return 1 if self.config.ablation.only_1hop else self.config.retrieval.max_hops

    def resolve_target(self, user_id: str, target: Optional[str] = None) -> str:
        if target:
            return target
        history = get_history(self.ws.histories, user_id)
        if not history.target_item:
            raise DataError(f"User {user_id!r} has no target_item; pass a target explicitly")
        return history.target_item

    def _score_all(self, paths: List[ReasoningPath], score_one) -> List[ScoredPath]:
        workers = min(self.config.workers, max(1, len(paths)))
        if workers <= 1:
            return [(p, score_one(p)) for p in paths]
        with ThreadPoolExecutor(max_workers=workers) as pool:
            return list(zip(paths, pool.map(score_one, paths)))

    def _flat_scorer(self, target: str):
        store = self.ws.store
        target_vec = store.entity(self.ws.catalog.entity(target))

        def score_one(p: ReasoningPath) -> PathScore:
            encoding = encode_path(store, p)
            relevance = cosine(target_vec, encoding)
            return PathScore(relevance=relevance, specificity=1.0, score=relevance, encoding=encoding)

        return score_one

    def _preference_scorer(self, intent: IntentVector):
        cfg = self.config
        ctx = SpecificityContext(
            g=self.ws.graph,
            store=self.ws.store,
            clusters=self.ws.clusters,
            intent=intent,
            weights=cfg.specificity,
            disabled=cfg.ablation.no_spec or cfg.ablation.no_pruning,
        )

        def score_one(p: ReasoningPath) -> PathScore:
            return score_path(self.ws.store, intent, p, ctx)

        return score_one

    def candidates(self, user_id: str, target: str) -> PathCandidates:
        history = get_history(self.ws.histories, user_id)
        return enumerate_paths(
            self.ws.graph,
            self.ws.catalog,
            history,
            target,
            max_hops=self.effective_max_hops,
            cap=self.config.retrieval.cap,
        )

    def retrieve(self, user_id: str, target: Optional[str] = None) -> RetrievalResult:
        """
        Run retrieval for one user.

        Args:
            user_id: User with a loaded history
            target: Target item; defaults to the user's held-out target_item

        Returns:
            RetrievalResult: Selected (path, score) pairs in selection order

        Raises:
            UnknownUserError, UnknownItemError, EmptyHistoryError, MissingEmbeddingError
        """
        started = time.perf_counter()
        cfg = self.config
        target = self.resolve_target(user_id, target)
        history = get_history(self.ws.histories, user_id)
        ablations = cfg.ablation.active()
        strategy = cfg.retrieval.strategy
        gamma = self.effective_gamma

        if cfg.ablation.no_kg:
            self.ws.catalog.entity(target)
            return RetrievalResult(user_id, target, [], 0, False, strategy, ablations, gamma)

        intent = None
        if strategy == "flat":
            score_one = self._flat_scorer(target)
        else:
            intent = compute_intent(
                self.ws.store,
                self.ws.catalog,
                history,
                target,
                temperature=cfg.retrieval.temperature,
                value_matrix=self.ws.value_matrix,
            )
            score_one = self._preference_scorer(intent)

        found = self.candidates(user_id, target)
        scored = self._score_all(found.paths, score_one)
        chosen = mmr_select(scored, self.ws.store, gamma, cfg.retrieval.top_n) if scored else []
        by_path = dict(scored)
        selected = [(p, by_path[p]) for p in chosen]

        latency = (time.perf_counter() - started) * 1000.0
        logger.info(
            f"Retrieved {len(selected)} of {found.total} candidate path(s) for {user_id}/{target} "
            f"in {latency:.1f} ms (strategy={strategy}, ablations={ablations or 'none'})"
        )
        return RetrievalResult(
            user_id=user_id,
            target=target,
            selected=selected,
            candidates=found.total,
            truncated=found.truncated,
            strategy=strategy,
            ablations=ablations,
            gamma=gamma,
            intent=intent,
            latency_ms=latency,
        )
