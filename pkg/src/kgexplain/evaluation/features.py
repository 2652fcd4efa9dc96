"""
Lexicon feature extraction from explanation text.
"""
import re
from dataclasses import dataclass
from enum import Enum
from typing import FrozenSet, Iterable, List

from kgexplain.kg.catalog import normalize_feature


class FeatureProvenance(str, Enum):
    LEXICON = "lexicon"
    PROVIDED = "provided"


@dataclass(frozen=True)
class FeatureSet:
    features: FrozenSet[str]
    provenance: FeatureProvenance = FeatureProvenance.LEXICON
    order: tuple = ()  # first-mention order, for display

    def __len__(self) -> int:
        return len(self.features)

    def __iter__(self):
        return iter(self.order or sorted(self.features))

    def __contains__(self, feature: str) -> bool:
        return feature in self.features

    @classmethod
    def provided(cls, features: Iterable[str]) -> "FeatureSet":
        ordered = list(dict.fromkeys(normalize_feature(f) for f in features if str(f).strip()))
        return cls(frozenset(ordered), FeatureProvenance.PROVIDED, tuple(ordered))


def _pattern(vocabulary: Iterable[str]) -> "re.Pattern":
    # longest entries first so "plot twist" wins over "plot"
    terms = sorted({normalize_feature(v) for v in vocabulary if str(v).strip()}, key=lambda t: (-len(t), t))
    body = "|".join(r"\s+".join(re.escape(w) for w in t.split(" ")) for t in terms)
    return re.compile(rf"(?<!\w)(?:{body})(?!\w)")


def extract_features(text: str, vocabulary: Iterable[str]) -> FeatureSet:
    """
    Whole-word, case-folded, longest-match-first lexicon matching.

    Matches do not overlap: once "plot twist" is consumed its "plot" is
    not reported separately.
    """
    vocab = list(vocabulary)
    if not vocab or not text:
        return FeatureSet(frozenset())
    found: List[str] = []
    for match in _pattern(vocab).finditer(text.casefold()):
        feature = normalize_feature(match.group(0))
        if feature not in found:
            found.append(feature)
    return FeatureSet(frozenset(found), FeatureProvenance.LEXICON, tuple(found))
