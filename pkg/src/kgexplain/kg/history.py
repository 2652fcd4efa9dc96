"""
User interaction histories with per-item extracted feature quadruples.

JSON-lines schema, one user per line:
    {"user_id": "u1", "target_item": "the_rosie_project",
     "history": [{"item_id": "...", "timestamp": "2021-03-04T10:00:00",
                  "features": [{"feature": "humor", "polarity": 1,
                                "sentence": "...", "score": 0.8}]}]}
"""
import logging
from collections import defaultdict
from dataclasses import dataclass, field
from typing import Dict, FrozenSet, Iterable, List, Optional, Tuple

from kgexplain.config.constants import DEFAULT_HISTORY_LENGTH
from kgexplain.errors import DataError, UnknownUserError
from kgexplain.kg.catalog import normalize_feature
from kgexplain.utils.date_utils import parse_timestamp
from kgexplain.utils.io import iter_jsonl

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class FeatureMention:
    """One (feature, opinion polarity, source sentence, score) quadruple."""
    feature: str
    polarity: int
    sentence: str
    score: float


@dataclass
class UserHistory:
    user_id: str
    interactions: List[Tuple[str, float]]
    features: Dict[str, List[FeatureMention]] = field(default_factory=dict)
    target_item: Optional[str] = None

    @property
    def items(self) -> List[str]:
        return [item_id for item_id, _ in self.interactions]

    def __len__(self) -> int:
        return len(self.interactions)

    def positive_features(self) -> FrozenSet[str]:
        """
        Positive historical features: those whose polarity-weighted score, summed over the
        retained history, is strictly positive.
        """
        totals: Dict[str, float] = defaultdict(float)
        for item_id in self.items:
            for mention in self.features.get(item_id, []):
                totals[mention.feature] += mention.polarity * mention.score
        return frozenset(f for f, total in totals.items() if total > 0)

    def liked_features(self, item_id: str) -> List[str]:
        """Positively mentioned features of one history item, in first-mention order."""
        seen: List[str] = []
        for mention in self.features.get(item_id, []):
            if mention.polarity > 0 and mention.feature not in seen:
                seen.append(mention.feature)
        return seen


def _parse_mention(raw: dict, where: str) -> FeatureMention:
    feature = normalize_feature(raw.get("feature", ""))
    if not feature:
        raise DataError(f"{where}: feature quadruple without a feature")
    polarity = int(raw.get("polarity", 1))
    if polarity not in (1, -1):
        raise DataError(f"{where}: polarity must be +1 or -1, got {polarity}")
    try:
        score = float(raw.get("score", 1.0))
    except (TypeError, ValueError) as e:
        raise DataError(f"{where}: invalid score {raw.get('score')!r}") from e
    return FeatureMention(feature=feature, polarity=polarity, sentence=str(raw.get("sentence", "")), score=score)


def load_histories(
    lines: Iterable[str],
    h_max: int = DEFAULT_HISTORY_LENGTH,
    source: str = "users",
) -> Dict[str, UserHistory]:
    """
    Parse user histories, keeping the h_max most recent interactions.

    Args:
        lines: JSON-lines text
        h_max: Maximum number of interactions retained per user
        source: File name for error messages

    Returns:
        Dict mapping user id to a timestamp-ascending UserHistory

    Raises:
        DataError: On malformed records
    """
    histories: Dict[str, UserHistory] = {}
    for line_number, record in iter_jsonl(lines, source):
        where = f"{source}:{line_number}"
        user_id = str(record.get("user_id", "")).strip()
        if not user_id:
            raise DataError(f"{where}: user_id is required")
        if user_id in histories:
            raise DataError(f"{where}: duplicate user_id {user_id!r}")

        entries = []
        features: Dict[str, List[FeatureMention]] = {}
        for position, entry in enumerate(record.get("history", []) or []):
            item_id = str(entry.get("item_id", "")).strip()
            if not item_id:
                raise DataError(f"{where}: history entry without item_id")
            try:
                ts = parse_timestamp(entry.get("timestamp", position))
            except ValueError as e:
                raise DataError(f"{where}: {e}") from e
            entries.append((ts, position, item_id))
            mentions = [_parse_mention(m, where) for m in entry.get("features", []) or []]
            features.setdefault(item_id, []).extend(mentions)

        # stable on equal timestamps: original position breaks ties
        entries.sort()
        kept = entries[-h_max:] if h_max > 0 else entries
        if len(entries) > len(kept):
            logger.debug(f"User {user_id}: truncated history from {len(entries)} to {len(kept)} items")
        kept_items = {item_id for _, _, item_id in kept}

        histories[user_id] = UserHistory(
            user_id=user_id,
            interactions=[(item_id, ts) for ts, _, item_id in kept],
            features={k: v for k, v in features.items() if k in kept_items},
            target_item=(str(record["target_item"]).strip() if record.get("target_item") else None),
        )

    logger.info(f"Loaded {len(histories)} user histories")
    return histories


def get_history(histories: Dict[str, UserHistory], user_id: str) -> UserHistory:
    try:
        return histories[user_id]
    except KeyError:
        raise UnknownUserError(f"Unknown user: {user_id!r}") from None
