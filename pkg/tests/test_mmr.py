import time

import numpy as np
import pytest

from kgexplain.embedding.store import cosine, store_from_arrays
from kgexplain.errors import ConfigError
from kgexplain.kg.graph import Direction
from kgexplain.retrieval.mmr import mmr_select
from kgexplain.retrieval.paths import ReasoningPath
from kgexplain.retrieval.scoring import PathScore

STORE = store_from_arrays(np.eye(4), np.eye(4)[:1])


def _candidates(scores, encodings):
    out = []
    for i, (s, enc) in enumerate(zip(scores, encodings)):
        path = ReasoningPath((0, i + 1), (0,), (Direction.OUTGOING,), target=0)
        out.append((path, PathScore(relevance=s, specificity=1.0, score=s, encoding=np.asarray(enc, dtype=float))))
    return out


def _brute_force(candidates, gamma, n):
    """Re-evaluate the objective from scratch at every step."""
    selected = []
    while len(selected) < min(n, len(candidates)):
        best, best_value = None, None
        for i, (_, s) in enumerate(candidates):
            if i in selected:
                continue
            if selected:
                diversity = max(cosine(s.encoding, candidates[j][1].encoding) for j in selected)
            else:
                diversity = 0.0
            value = gamma * s.score - (1.0 - gamma) * diversity
            if best_value is None or value > best_value:
                best, best_value = i, value
        selected.append(best)
    return [candidates[i][0] for i in selected]


class TestMMRSelect:

    def test_matches_brute_force_oracle(self):
        rng = np.random.default_rng(7)
        started = time.perf_counter()
        for _ in range(200):
            size = int(rng.integers(1, 9))
            scores = rng.uniform(-1.0, 1.0, size)
            encodings = rng.standard_normal((size, 4))
            gamma = float(rng.uniform(0.0, 1.0))
            n = int(rng.integers(1, 5))
            candidates = _candidates(scores, encodings)
            assert mmr_select(candidates, STORE, gamma, n) == _brute_force(candidates, gamma, n)
        assert time.perf_counter() - started < 5.0

    def test_gamma_one_is_top_n(self):
        candidates = _candidates([0.2, 0.9, 0.5, 0.9], np.eye(4))
        picked = mmr_select(candidates, STORE, 1.0, 3)
        assert picked == [candidates[1][0], candidates[3][0], candidates[2][0]]

    def test_diversity_skips_duplicate(self):
        encodings = [[1.0, 0.0, 0.0, 0.0], [1.0, 0.0, 0.0, 0.0], [0.0, 1.0, 0.0, 0.0]]
        candidates = _candidates([0.9, 0.85, 0.6], encodings)
        picked = mmr_select(candidates, STORE, 0.5, 2)
        assert picked == [candidates[0][0], candidates[2][0]]

    def test_returns_all_when_fewer_than_n(self):
        candidates = _candidates([0.1, 0.2], np.eye(4)[:2])
        assert len(mmr_select(candidates, STORE, 0.6, 5)) == 2

    def test_empty(self):
        assert mmr_select([], STORE, 0.6, 5) == []

    @pytest.mark.parametrize("gamma,n", [(-0.1, 3), (1.1, 3), (0.5, 0)])
    def test_invalid_arguments(self, gamma, n):
        with pytest.raises(ConfigError):
            mmr_select(_candidates([0.1], np.eye(4)[:1]), STORE, gamma, n)
