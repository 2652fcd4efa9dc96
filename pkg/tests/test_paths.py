import pytest

from kgexplain.errors import ConfigError, UnknownItemError
from kgexplain.kg.graph import Direction
from kgexplain.kg.history import load_histories
from kgexplain.retrieval.paths import HopRole, ReasoningPath, enumerate_paths


@pytest.fixture
def history():
    return load_histories(['{"user_id": "u", "history": [{"item_id": "h"}, {"item_id": "t"}]}'])["u"]


class TestEnumeratePaths:

    def test_triangle(self, triangle, history):
        g, cat = triangle
        a, h, t = (g.entity_id(n) for n in "aht")
        found = enumerate_paths(g, cat, history, "t")
        assert found.total == 2
        assert not found.truncated
        one, two = found.paths
        assert one.entities == (t, a)
        assert one.role is HopRole.EXPLICIT
        assert one.anchor is None
        assert two.entities == (h, a, t)
        assert two.directions == (Direction.OUTGOING, Direction.INCOMING)
        assert two.anchor == "h"
        assert two.role is HopRole.RELATIONAL

    def test_one_hop_skips_item_neighbors(self, triangle, history):
        g, cat = triangle
        found = enumerate_paths(g, cat, history, "t", max_hops=1)
        assert [p.entities for p in found.paths] == [(g.entity_id("t"), g.entity_id("a"))]

    def test_paths_are_valid_and_simple(self, toy_workspace):
        ws = toy_workspace
        found = enumerate_paths(ws.graph, ws.catalog, ws.histories["u1"], "the_rosie_project")
        assert found.paths
        for p in found.paths:
            assert p.is_valid(ws.graph)
            assert p.entities[-1] == p.target or p.hops == 1
        keys = [p.sort_key() for p in found.paths]
        assert keys == sorted(keys)

    def test_cap_keeps_smallest(self, toy_workspace):
        ws = toy_workspace
        full = enumerate_paths(ws.graph, ws.catalog, ws.histories["u1"], "the_rosie_project")
        capped = enumerate_paths(ws.graph, ws.catalog, ws.histories["u1"], "the_rosie_project", cap=2)
        assert capped.truncated
        assert capped.total == full.total
        assert capped.paths == full.paths[:2]

    def test_unknown_target(self, triangle, history):
        g, cat = triangle
        with pytest.raises(UnknownItemError):
            enumerate_paths(g, cat, history, "nope")

    @pytest.mark.parametrize("kwargs", [{"max_hops": 0}, {"max_hops": 4}, {"cap": 0}])
    def test_bad_limits(self, triangle, history, kwargs):
        g, cat = triangle
        with pytest.raises(ConfigError):
            enumerate_paths(g, cat, history, "t", **kwargs)

    def test_history_item_outside_graph_is_skipped(self, triangle):
        g, cat = triangle
        history = load_histories(['{"user_id": "u", "history": [{"item_id": "ghost"}, {"item_id": "h"}]}'])["u"]
        found = enumerate_paths(g, cat, history, "t")
        assert found.total == 2


class TestReasoningPath:

    def test_evidence_nodes_exclude_target(self, triangle):
        g, _ = triangle
        a, h, t = (g.entity_id(n) for n in "aht")
        p = ReasoningPath((h, a, t), (0, 0), (Direction.OUTGOING, Direction.INCOMING), target=t)
        assert p.evidence_nodes() == (h, a)

    def test_invalid_orientation(self, triangle):
        g, _ = triangle
        a, t = g.entity_id("a"), g.entity_id("t")
        assert not ReasoningPath((t, a), (0,), (Direction.INCOMING,), target=t).is_valid(g)

    def test_non_simple(self, triangle):
        g, _ = triangle
        a, h, t = (g.entity_id(n) for n in "aht")
        p = ReasoningPath((t, a, t), (0, 0), (Direction.OUTGOING, Direction.INCOMING), target=t)
        assert not p.is_valid(g)
