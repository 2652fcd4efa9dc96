"""
Text encoders: deterministic seeded-hash vectors and an HTTP encoder endpoint.

The HTTP endpoint contract is
    POST {"texts": ["...", ...]}  ->  {"vectors": [[...], ...]}
"""
import logging
import threading
import time
from typing import Dict, List, Optional, Sequence

import numpy as np
import requests

from kgexplain.config.constants import DEFAULT_HTTP_TIMEOUT, ZERO_NORM
from kgexplain.errors import DimensionMismatchError, EncoderError
from kgexplain.utils.hashing import stable_seed

logger = logging.getLogger(__name__)

HTTP_BATCH_SIZE = 256


def hash_vector(name: str, dim: int, seed: int, namespace: str) -> np.ndarray:
    """
    Unit vector drawn from a standard normal seeded by (seed, namespace, name).
    Bitwise reproducible across runs and platforms.
    """
    rng = np.random.default_rng(stable_seed(seed, namespace, name))
    vec = rng.standard_normal(dim)
    norm = np.linalg.norm(vec)
    return vec / norm if norm >= ZERO_NORM else vec


def tokenize(text: str) -> List[str]:
    return text.casefold().split()


class HashTextEncoder:
    """Mean of per-token hash vectors, L2-normalized. Order-invariant by construction."""

    backend = "hash"

    def __init__(self, dim: int, seed: int):
        self.dim = dim
        self.seed = seed

    def token_vector(self, token: str) -> np.ndarray:
        return hash_vector(token, self.dim, self.seed, "token")

    def encode(self, texts: Sequence[str]) -> np.ndarray:
        out = np.zeros((len(texts), self.dim))
        for row, text in enumerate(texts):
            tokens = tokenize(text)
            if not tokens:
                raise ValueError("Cannot encode empty text")
            mean = np.mean([self.token_vector(t) for t in sorted(tokens)], axis=0)
            norm = np.linalg.norm(mean)
            out[row] = mean / norm if norm >= ZERO_NORM else mean
        return out


class HttpEncoder:
    """
    Client for an external encoder endpoint.

    Results are cached per text; each request is retried once on
    connection errors and timeouts before EncoderError is raised.
    """

    backend = "http"

    def __init__(
        self,
        url: str,
        dim: Optional[int] = None,
        token: Optional[str] = None,
        timeout: float = DEFAULT_HTTP_TIMEOUT,
    ):
        self.url = url
        self.dim = dim
        self.token = token
        self.timeout = timeout
        self._cache: Dict[str, np.ndarray] = {}
        self._lock = threading.Lock()

    def _headers(self) -> Dict[str, str]:
        headers = {"Content-Type": "application/json"}
        if self.token:
            headers["Authorization"] = f"Bearer {self.token}"
        return headers

    def _post(self, texts: List[str]) -> List[List[float]]:
        payload = {"texts": texts}
        last_error: Optional[Exception] = None
        for attempt in (1, 2):
            try:
                response = requests.post(self.url, json=payload, headers=self._headers(), timeout=self.timeout)
                response.raise_for_status()
                vectors = response.json().get("vectors")
                if not isinstance(vectors, list) or len(vectors) != len(texts):
                    raise EncoderError(f"Encoder returned {type(vectors).__name__} for {len(texts)} texts")
                return vectors
            except (requests.ConnectionError, requests.Timeout) as e:
                last_error = e
                logger.warning(f"Encoder request failed (attempt {attempt}/2): {e}")
                if attempt == 1:
                    time.sleep(0.5)
            except (requests.RequestException, ValueError) as e:
                logger.error(f"Encoder endpoint error: {str(e)}")
                raise EncoderError(f"Encoder endpoint {self.url} failed: {e}") from e
        raise EncoderError(f"Encoder endpoint {self.url} unreachable: {last_error}") from last_error

    def encode(self, texts: Sequence[str]) -> np.ndarray:
        for text in texts:
            if not text or not text.strip():
                raise ValueError("Cannot encode empty text")

        with self._lock:
            missing = [t for t in dict.fromkeys(texts) if t not in self._cache]

        for start in range(0, len(missing), HTTP_BATCH_SIZE):
            batch = missing[start:start + HTTP_BATCH_SIZE]
            vectors = self._post(batch)
            for text, raw in zip(batch, vectors):
                vec = np.asarray(raw, dtype=float)
                if self.dim is None:
                    self.dim = vec.shape[0]
                if vec.ndim != 1 or vec.shape[0] != self.dim:
                    raise DimensionMismatchError(
                        f"Encoder returned dimension {vec.shape} for {text!r}, expected {self.dim}"
                    )
                if not np.all(np.isfinite(vec)):
                    raise EncoderError(f"Encoder returned non-finite components for {text!r}")
                with self._lock:
                    self._cache[text] = vec

        with self._lock:
            return np.array([self._cache[t] for t in texts]) if texts else np.zeros((0, self.dim or 0))
