"""
Preference profiles and the proxy alignment check.

A generated feature is preference-aligned when the user praised it before
or, failing that, when its embedding is close enough to the mean embedding
of everything the user praised.
"""
import logging
from dataclasses import dataclass, replace
from enum import Enum
from typing import FrozenSet, Iterable, Tuple

import numpy as np

from kgexplain.config.constants import DEFAULT_TAU
from kgexplain.embedding.store import EmbeddingStore, cosine, encode_text
from kgexplain.errors import ConfigError
from kgexplain.kg.history import UserHistory

logger = logging.getLogger(__name__)


class Alignment(str, Enum):
    ALIGNED_HIST = "ALIGNED_HIST"
    ALIGNED_PROXY = "ALIGNED_PROXY"
    INCONSISTENT = "INCONSISTENT"


@dataclass(frozen=True)
class PreferenceProfile:
    """
    The features a user praised and the mean embedding of those features.

    The vector is fixed when the profile is built; `with_features` widens the
    membership clause only.
    """
    user_id: str
    features: FrozenSet[str]
    vector: np.ndarray
    tau: float = DEFAULT_TAU

    def with_tau(self, tau: float) -> "PreferenceProfile":
        if not 0.0 <= tau <= 1.0:
            raise ConfigError(f"tau must be in [0, 1], got {tau}")
        return replace(self, tau=tau)

    def with_features(self, extra: Iterable[str]) -> "PreferenceProfile":
        return replace(self, features=self.features | frozenset(extra))


def build_profile(history: UserHistory, store: EmbeddingStore, tau: float = DEFAULT_TAU) -> PreferenceProfile:
    """
    Raises:
        ConfigError: If tau is outside [0, 1]
        EncoderError: If the http encoder fails
    """
    if not 0.0 <= tau <= 1.0:
        raise ConfigError(f"tau must be in [0, 1], got {tau}")
    features = history.positive_features()
    if features:
        vector = np.mean([encode_text(store, f) for f in sorted(features)], axis=0)
    else:
        logger.warning(f"User {history.user_id!r} has no positive historical features")
        vector = np.zeros(store.dim)
    return PreferenceProfile(user_id=history.user_id, features=features, vector=vector, tau=tau)


def proxy_score(profile: PreferenceProfile, f: str, store: EmbeddingStore) -> float:
    return cosine(encode_text(store, f), profile.vector)


def judge(profile: PreferenceProfile, f: str, score: float) -> Alignment:
    if f in profile.features:
        return Alignment.ALIGNED_HIST
    if score >= profile.tau:
        return Alignment.ALIGNED_PROXY
    return Alignment.INCONSISTENT


def preference_proxy(profile: PreferenceProfile, f: str, store: EmbeddingStore) -> Tuple[float, bool]:
    """
    Proxy score cos(encode(f), profile vector) and validity (historical member, or score >= tau).
    """
    score = proxy_score(profile, f, store)
    return score, judge(profile, f, score) is not Alignment.INCONSISTENT
