"""
Explanation hallucination rates.

F-EHR: share of generated features that are not attributes of the item.
P-EHR: share of generated features that are neither in the user's positive
history nor close to it in embedding space.

Both are undefined (None) for explanations that mention no feature.
"""
from dataclasses import dataclass, field
from enum import Enum
from typing import Dict, FrozenSet, List, Optional

from kgexplain.embedding.store import EmbeddingStore
from kgexplain.evaluation.features import FeatureSet
from kgexplain.evaluation.preference import Alignment, PreferenceProfile, judge, proxy_score


class Factuality(str, Enum):
    FACTUAL = "FACTUAL"
    NONFACTUAL = "NONFACTUAL"


@dataclass(frozen=True)
class FeatureVerdict:
    feature: str
    factuality: Factuality
    alignment: Alignment
    proxy_score: float

    def to_dict(self) -> Dict[str, object]:
        return {
            "feature": self.feature,
            "factuality": self.factuality.value,
            "alignment": self.alignment.value,
            "proxy_score": self.proxy_score,
        }


@dataclass
class EvalInstance:
    user_id: str
    item_id: str
    explanation: str
    features: FeatureSet
    item_features: FrozenSet[str]
    verdicts: List[FeatureVerdict] = field(default_factory=list)

    @property
    def scoreable(self) -> bool:
        return len(self.features) > 0


def f_ehr(instance: EvalInstance) -> Optional[float]:
    """Share of mentioned features the item lacks, or None when nothing is mentioned."""
    if not instance.scoreable:
        return None
    return len(instance.features.features - instance.item_features) / len(instance.features)


def p_ehr(instance: EvalInstance, profile: PreferenceProfile, store: EmbeddingStore) -> Optional[float]:
    """Share of mentioned features inconsistent with the profile, or None when nothing is mentioned."""
    if not instance.scoreable:
        return None
    penalties = [
        judge(profile, f, proxy_score(profile, f, store)) is Alignment.INCONSISTENT
        for f in instance.features
    ]
    return sum(penalties) / len(penalties)


def feature_verdicts(instance: EvalInstance, profile: PreferenceProfile, store: EmbeddingStore) -> List[FeatureVerdict]:
    """One verdict pair per generated feature, in mention order."""
    verdicts = []
    for f in instance.features:
        score = proxy_score(profile, f, store)
        verdicts.append(FeatureVerdict(
            feature=f,
            factuality=Factuality.FACTUAL if f in instance.item_features else Factuality.NONFACTUAL,
            alignment=judge(profile, f, score),
            proxy_score=score,
        ))
    return verdicts


def rates_from_verdicts(verdicts: List[FeatureVerdict]) -> Optional[Dict[str, float]]:
    if not verdicts:
        return None
    n = len(verdicts)
    return {
        "f_ehr": sum(v.factuality is Factuality.NONFACTUAL for v in verdicts) / n,
        "p_ehr": sum(v.alignment is Alignment.INCONSISTENT for v in verdicts) / n,
    }
