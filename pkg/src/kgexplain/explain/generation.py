"""
Explanation generation backends.

The stub backend is a pure function of the prompt: it names the
attributes attached to the target on EXPLICIT and IMPLICIT evidence lines
and nothing else, so evaluation can run end to end without a model. The
http backend posts the prompt to a completion endpoint.
"""
import logging
import threading
import time
from dataclasses import dataclass, field
from typing import Any, Dict, Optional, Protocol

import requests

from kgexplain.config.constants import (
    DEFAULT_GEN_TEMPERATURE,
    DEFAULT_HTTP_TIMEOUT,
    DEFAULT_MAX_IN_FLIGHT,
    DEFAULT_MAX_TOKENS,
    DEFAULT_SEED,
)
from kgexplain.config.settings import EngineConfig
from kgexplain.errors import ConfigError, GenerationError
from kgexplain.explain.serialize import attribute_names

logger = logging.getLogger(__name__)

GENERIC_EXPLANATION = "This pick follows the overall pattern of what you enjoyed before."


@dataclass(frozen=True)
class GenerationRequest:
    prompt: str
    max_tokens: int = DEFAULT_MAX_TOKENS
    temperature: float = DEFAULT_GEN_TEMPERATURE
    seed: int = DEFAULT_SEED


@dataclass
class GenerationResponse:
    text: str
    backend: str
    latency_ms: float = 0.0
    metadata: Dict[str, Any] = field(default_factory=dict)


class Generator(Protocol):
    backend: str

    def generate(self, req: GenerationRequest) -> GenerationResponse:
        ...


def _join_names(names) -> str:
    if len(names) == 1:
        return names[0]
    return ", ".join(names[:-1]) + " and " + names[-1]


class StubGenerator:
    backend = "stub"

    def generate(self, req: GenerationRequest) -> GenerationResponse:
        names = attribute_names(req.prompt)
        if names:
            text = f"Recommended for you because it offers {_join_names(names)}."
        else:
            text = GENERIC_EXPLANATION
        return GenerationResponse(text=text, backend=self.backend, metadata={"attributes": names})


class HttpGenerator:
    """
    Completion endpoint client.

    POST {"prompt", "max_tokens", "temperature", "seed"} -> {"text"}.
    At most `max_in_flight` requests run at once; connection failures and
    timeouts are retried once.
    """

    backend = "http"

    def __init__(
        self,
        url: str,
        token: Optional[str] = None,
        timeout: float = DEFAULT_HTTP_TIMEOUT,
        max_in_flight: int = DEFAULT_MAX_IN_FLIGHT,
    ):
        if not url:
            raise ConfigError("HTTP generation backend requires a completion URL")
        self.url = url
        self.token = token
        self.timeout = timeout
        self._slots = threading.BoundedSemaphore(max_in_flight)

    def _headers(self) -> Dict[str, str]:
        headers = {"Content-Type": "application/json"}
        if self.token:
            headers["Authorization"] = f"Bearer {self.token}"
        return headers

    def _post(self, payload: Dict[str, Any]) -> Dict[str, Any]:
        last_error: Optional[Exception] = None
        for attempt in (1, 2):
            try:
                response = requests.post(self.url, json=payload, headers=self._headers(), timeout=self.timeout)
                response.raise_for_status()
                return response.json()
            except (requests.ConnectionError, requests.Timeout) as e:
                last_error = e
                logger.warning(f"Completion request failed (attempt {attempt}/2): {e}")
            except (requests.RequestException, ValueError) as e:
                logger.error(f"Completion endpoint error: {str(e)}")
                raise GenerationError(f"Completion endpoint {self.url} failed: {e}") from e
        raise GenerationError(f"Completion endpoint {self.url} unreachable: {last_error}") from last_error

    def generate(self, req: GenerationRequest) -> GenerationResponse:
        payload = {
            "prompt": req.prompt,
            "max_tokens": req.max_tokens,
            "temperature": req.temperature,
            "seed": req.seed,
        }
        logger.debug(f"Completion request: {len(req.prompt)} chars, max_tokens={req.max_tokens}")
        started = time.perf_counter()
        with self._slots:
            body = self._post(payload)
        latency = (time.perf_counter() - started) * 1000.0

        text = body.get("text") if isinstance(body, dict) else None
        if not isinstance(text, str):
            raise GenerationError(f"Completion endpoint returned no 'text' field: {str(body)[:80]}")
        if not text.strip():
            raise GenerationError("Completion endpoint returned an empty explanation")
        return GenerationResponse(text=text.strip(), backend=self.backend, latency_ms=latency)


def make_generator(config: EngineConfig, backend: Optional[str] = None) -> Generator:
    name = backend or config.generation.backend
    if name == "stub":
        return StubGenerator()
    if name == "http":
        return HttpGenerator(
            config.completion_url,
            token=config.api_token,
            timeout=config.generation.timeout,
            max_in_flight=config.generation.max_in_flight,
        )
    raise ConfigError(f"Unknown generation backend: {name}")


def generate(req: GenerationRequest, backend: Generator) -> GenerationResponse:
    """
    Raises:
        GenerationError: Endpoint failure, malformed or empty completion
    """
    response = backend.generate(req)
    if not response.text.strip():
        raise GenerationError(f"{response.backend} backend produced an empty explanation")
    return response
