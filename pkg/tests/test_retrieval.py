from dataclasses import replace

import numpy as np
import pytest

from kgexplain.cli.commands import evaluate_variant
from kgexplain.embedding.aggregate import aggregate_structure
from kgexplain.embedding.clustering import kmeans_fit
from kgexplain.embedding.store import cosine, init_embeddings, store_from_arrays
from kgexplain.errors import DataError, DimensionMismatchError, EmptyHistoryError, UnknownUserError
from kgexplain.kg.history import load_histories
from kgexplain.retrieval.export import paths_frame, result_to_record
from kgexplain.retrieval.intent import compute_intent, load_value_matrix
from kgexplain.retrieval.paths import enumerate_paths
from kgexplain.retrieval.pipeline import EvidenceRetriever
from kgexplain.retrieval.scoring import score_path
from kgexplain.retrieval.specificity import SpecificityContext


def _with_ablation(config, **flags):
    return replace(config, ablation=replace(config.ablation, **flags))


class TestIntent:

    def test_weights_follow_history_and_sum_to_one(self, toy_workspace):
        ws = toy_workspace
        history = ws.histories["u1"]
        intent = compute_intent(ws.store, ws.catalog, history, "the_rosie_project")
        assert intent.history_items == history.items
        assert intent.weights.sum() == pytest.approx(1.0)
        expected = intent.weights @ np.array([ws.store.entity(ws.catalog.entity(i)) for i in history.items])
        np.testing.assert_allclose(intent.vector, expected)

    def test_target_excluded(self, triangle):
        g, cat = triangle
        store = aggregate_structure(g, init_embeddings(g, dim=8))
        history = load_histories(['{"user_id": "u", "history": [{"item_id": "h"}, {"item_id": "t"}]}'])["u"]
        intent = compute_intent(store, cat, history, "t")
        assert intent.history_items == ["h"]
        assert intent.weight_of("h") == pytest.approx(1.0)

    def test_only_target_in_history(self, triangle):
        g, cat = triangle
        store = init_embeddings(g, dim=8)
        history = load_histories(['{"user_id": "u", "history": [{"item_id": "t"}]}'])["u"]
        with pytest.raises(EmptyHistoryError):
            compute_intent(store, cat, history, "t")

    def test_uncatalogued_history_item_skipped(self, triangle):
        g, cat = triangle
        store = aggregate_structure(g, init_embeddings(g, dim=8))
        history = load_histories(['{"user_id": "u", "history": [{"item_id": "ghost"}, {"item_id": "h"}]}'])["u"]
        intent = compute_intent(store, cat, history, "t")
        assert intent.history_items == ["h"]
        assert intent.weight_of("h") == pytest.approx(1.0)

    def test_only_uncatalogued_history(self, triangle):
        g, cat = triangle
        store = init_embeddings(g, dim=8)
        history = load_histories(['{"user_id": "u", "history": [{"item_id": "ghost"}]}'])["u"]
        with pytest.raises(EmptyHistoryError):
            compute_intent(store, cat, history, "t")

    def test_value_matrix(self, tmp_path, triangle):
        g, cat = triangle
        store = store_from_arrays(np.eye(3), np.ones((2, 3)))
        path = tmp_path / "w.txt"
        np.savetxt(path, 2.0 * np.eye(3))
        history = load_histories(['{"user_id": "u", "history": [{"item_id": "h"}]}'])["u"]
        intent = compute_intent(store, cat, history, "t", value_matrix=load_value_matrix(path, 3))
        np.testing.assert_allclose(intent.vector, 2.0 * store.entity(g.entity_id("h")))

    def test_value_matrix_shape(self, tmp_path):
        path = tmp_path / "w.txt"
        np.savetxt(path, np.eye(2))
        with pytest.raises(DimensionMismatchError):
            load_value_matrix(path, 3)


class TestScoring:

    def test_score_is_relevance_times_mean_specificity(self, toy_workspace):
        ws = toy_workspace
        history = ws.histories["u1"]
        intent = compute_intent(ws.store, ws.catalog, history, "the_rosie_project")
        ctx = SpecificityContext(ws.graph, ws.store, ws.clusters, intent, ws.config.specificity)
        for p in enumerate_paths(ws.graph, ws.catalog, history, "the_rosie_project").paths:
            s = score_path(ws.store, intent, p, ctx)
            mean = np.mean([ctx(v) for v in p.evidence_nodes()])
            assert s.specificity == pytest.approx(mean)
            assert s.score == pytest.approx(s.relevance * mean)
            assert s.relevance == pytest.approx(cosine(intent.vector, s.encoding))

    def test_disabled_context_scores_relevance(self, toy_workspace):
        ws = toy_workspace
        history = ws.histories["u1"]
        intent = compute_intent(ws.store, ws.catalog, history, "the_rosie_project")
        ctx = SpecificityContext(ws.graph, ws.store, ws.clusters, intent, disabled=True)
        p = enumerate_paths(ws.graph, ws.catalog, history, "the_rosie_project").paths[0]
        s = score_path(ws.store, intent, p, ctx)
        assert s.score == s.relevance


class TestEvidenceRetriever:

    def test_full_pipeline(self, toy_workspace, toy_config):
        result = EvidenceRetriever(toy_workspace, toy_config).retrieve("u1")
        assert result.target == "the_rosie_project"
        assert len(result.selected) == toy_config.retrieval.top_n
        assert result.candidates > len(result.selected)
        assert result.gamma == pytest.approx(0.6)
        for p, s in result.selected:
            assert p.is_valid(toy_workspace.graph)
            assert -1.0 <= s.score <= 1.0

    def test_deterministic(self, toy_workspace, toy_config):
        retriever = EvidenceRetriever(toy_workspace, toy_config)
        first = result_to_record(retriever.retrieve("u2"), toy_workspace.graph)
        second = result_to_record(retriever.retrieve("u2"), toy_workspace.graph)
        assert first == second

    def test_parallel_scoring_matches_serial(self, toy_workspace, toy_config):
        serial = EvidenceRetriever(toy_workspace, toy_config).retrieve("u1")
        parallel = EvidenceRetriever(toy_workspace, replace(toy_config, jobs=4)).retrieve("u1")
        assert serial.paths == parallel.paths

    def test_no_kg(self, toy_workspace, toy_config):
        result = EvidenceRetriever(toy_workspace, _with_ablation(toy_config, no_kg=True)).retrieve("u1")
        assert result.selected == []
        assert result.ablations == ["no_kg"]

    def test_only_one_hop(self, toy_workspace, toy_config):
        result = EvidenceRetriever(toy_workspace, _with_ablation(toy_config, only_1hop=True)).retrieve("u1")
        assert result.selected
        assert all(p.hops == 1 for p in result.paths)

    def test_no_pruning_is_relevance_top_n(self, toy_workspace, toy_config):
        result = EvidenceRetriever(toy_workspace, _with_ablation(toy_config, no_pruning=True)).retrieve("u1")
        assert result.gamma == 1.0
        relevances = [s.relevance for _, s in result.selected]
        assert relevances == sorted(relevances, reverse=True)
        assert all(s.specificity == 1.0 for _, s in result.selected)

    def test_no_mmr_keeps_specificity(self, toy_workspace, toy_config):
        result = EvidenceRetriever(toy_workspace, _with_ablation(toy_config, no_mmr=True)).retrieve("u1")
        assert result.gamma == 1.0
        scores = [s.score for _, s in result.selected]
        assert scores == sorted(scores, reverse=True)

    def test_flat_strategy(self, toy_workspace, toy_config):
        config = replace(toy_config, retrieval=replace(toy_config.retrieval, strategy="flat"))
        result = EvidenceRetriever(toy_workspace, config).retrieve("u1")
        assert result.intent is None
        assert result.gamma == 1.0
        assert len(result.selected) == toy_config.retrieval.top_n

    def test_explicit_target(self, toy_workspace, toy_config):
        result = EvidenceRetriever(toy_workspace, toy_config).retrieve("u2", "the_midnight_library")
        assert result.target == "the_midnight_library"

    def test_unknown_user(self, toy_workspace, toy_config):
        with pytest.raises(UnknownUserError):
            EvidenceRetriever(toy_workspace, toy_config).retrieve("nobody")

    def test_user_without_target(self, toy_workspace, toy_config):
        with pytest.raises(DataError):
            EvidenceRetriever(toy_workspace, toy_config).retrieve("u3")

    def test_export(self, toy_workspace, toy_config):
        result = EvidenceRetriever(toy_workspace, toy_config).retrieve("u1")
        record = result_to_record(result, toy_workspace.graph)
        assert [p["rank"] for p in record["paths"]] == list(range(1, len(result.selected) + 1))
        assert set(record["intent_weights"]) == set(toy_workspace.histories["u1"].items)
        frame = paths_frame([result], toy_workspace.graph)
        assert len(frame) == len(result.selected)


class TestScaleInvariance:

    @pytest.mark.parametrize("factor", [0.01, 1.0, 100.0])
    def test_selection_unchanged(self, toy_workspace, toy_config, factor):
        ws = toy_workspace
        layers = toy_config.embedding.layers

        def rebuilt(c):
            store = aggregate_structure(ws.graph, ws.store.scaled(c), layers=layers)
            clusters = kmeans_fit(store, k=toy_config.embedding.clusters, seed=toy_config.embedding.seed)
            return replace(ws, store=store, clusters=clusters)

        reference = EvidenceRetriever(rebuilt(1.0), toy_config).retrieve("u1")
        scaled = EvidenceRetriever(rebuilt(factor), toy_config).retrieve("u1")
        assert scaled.paths == reference.paths
        for (_, a), (_, b) in zip(reference.selected, scaled.selected):
            assert b.relevance == pytest.approx(a.relevance, abs=1e-6)
            assert b.specificity == pytest.approx(a.specificity, abs=1e-6)
        np.testing.assert_allclose(scaled.intent.weights, reference.intent.weights, atol=1e-6)


class TestPruningEffect:

    def test_full_pipeline_beats_no_pruning(self, toy_workspace, toy_config):
        full = evaluate_variant(toy_workspace, toy_config)
        unpruned = evaluate_variant(toy_workspace, _with_ablation(toy_config, no_pruning=True))
        assert full.f_ehr == 0.0
        assert unpruned.f_ehr == 0.0
        assert full.p_ehr < unpruned.p_ehr
