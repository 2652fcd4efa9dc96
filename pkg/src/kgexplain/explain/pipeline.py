"""
Explanation pipeline: retrieval -> serialization -> prompt -> generation,
with a provenance record for every explanation.
"""
import logging
from dataclasses import dataclass
from typing import Any, Dict, Optional

from kgexplain.explain.generation import GenerationRequest, GenerationResponse, Generator, generate, make_generator
from kgexplain.explain.prompt import PromptBundle, assemble_prompt, history_text, load_system_instruction, target_text
from kgexplain.explain.serialize import serialize_paths
from kgexplain.kg.history import get_history
from kgexplain.retrieval.export import result_to_record
from kgexplain.retrieval.pipeline import EvidenceRetriever, RetrievalResult

logger = logging.getLogger(__name__)


@dataclass
class Explanation:
    retrieval: RetrievalResult
    prompt: PromptBundle
    response: GenerationResponse

    @property
    def text(self) -> str:
        return self.response.text


class Explainer:
    def __init__(self, retriever: EvidenceRetriever, generator: Optional[Generator] = None):
        self.retriever = retriever
        self.config = retriever.config
        self.generator = generator or make_generator(self.config)
        self._system = load_system_instruction(self.config.generation.system_instruction)

    def build_prompt(self, result: RetrievalResult) -> PromptBundle:
        ws = self.retriever.ws
        history = get_history(ws.histories, result.user_id)
        return assemble_prompt(
            system=self._system,
            history=history_text(history, ws.catalog, exclude=result.target),
            target=target_text(ws.catalog, result.target),
            evidence=serialize_paths(result.paths, ws.graph),
        )

    def explain(self, user_id: str, target: Optional[str] = None) -> Explanation:
        result = self.retriever.retrieve(user_id, target)
        bundle = self.build_prompt(result)
        gen = self.config.generation
        response = generate(
            GenerationRequest(bundle.text, max_tokens=gen.max_tokens, temperature=gen.temperature, seed=gen.seed),
            self.generator,
        )
        logger.info(f"Explained {result.target} for {user_id} with the {response.backend} backend")
        return Explanation(retrieval=result, prompt=bundle, response=response)

    def provenance(self, explanation: Explanation) -> Dict[str, Any]:
        """Record tying an explanation to its evidence, prompt and configuration."""
        return {
            "user_id": explanation.retrieval.user_id,
            "target": explanation.retrieval.target,
            "explanation": explanation.text,
            "backend": explanation.response.backend,
            "prompt_hash": explanation.prompt.prompt_hash,
            "config_hash": self.config.config_hash(),
            "evidence": explanation.prompt.evidence.splitlines(),
            "retrieval": result_to_record(explanation.retrieval, self.retriever.ws.graph),
        }
