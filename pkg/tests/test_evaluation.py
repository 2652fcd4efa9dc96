import json

import numpy as np
import pytest
from openpyxl import load_workbook

from kgexplain.errors import DataError, UnscoreableCorpusError
from kgexplain.evaluation.features import FeatureProvenance, FeatureSet, extract_features
from kgexplain.evaluation.metrics import EvalInstance, Factuality, f_ehr, p_ehr
from kgexplain.evaluation.preference import Alignment, build_profile, judge, preference_proxy
from kgexplain.evaluation.report import (
    evaluate_corpus,
    format_report_table,
    load_corpus,
    tau_grid,
    write_report_json,
    write_report_xlsx,
    write_tau_sweep_csv,
)
from kgexplain.kg.history import load_histories
from kgexplain.utils.io import read_lines

from conftest import TOY_DIR


@pytest.fixture(scope="module")
def expected():
    return json.loads((TOY_DIR / "eval_expected.json").read_text(encoding="utf-8"))


@pytest.fixture(scope="module")
def profiles(toy_workspace):
    return {u: build_profile(h, toy_workspace.store, 0.4) for u, h in toy_workspace.histories.items()}


@pytest.fixture
def corpus(toy_workspace):
    return load_corpus(read_lines(TOY_DIR / "eval_corpus.jsonl"), toy_workspace.catalog)


class TestFeatureExtraction:

    VOCAB = ["plot", "plot twist", "dry wit", "page turner"]

    def test_longest_match_wins(self):
        fs = extract_features("A plot twist with Dry  Wit.", self.VOCAB)
        assert fs.order == ("plot twist", "dry wit")
        assert fs.provenance is FeatureProvenance.LEXICON

    def test_whole_words_only(self):
        assert len(extract_features("subplot twisting page-turners", self.VOCAB)) == 0

    def test_repeated_mentions_counted_once(self):
        assert len(extract_features("plot, plot and more plot", self.VOCAB)) == 1

    def test_provided_features_normalized(self):
        fs = FeatureSet.provided(["Plot Twist", "plot twist", " "])
        assert fs.features == frozenset({"plot twist"})
        assert fs.provenance is FeatureProvenance.PROVIDED


class TestPreference:

    def test_hist_membership_wins(self, profiles, toy_workspace):
        score, valid = preference_proxy(profiles["u1"], "dry wit", toy_workspace.store)
        assert valid
        assert judge(profiles["u1"], "dry wit", -1.0) is Alignment.ALIGNED_HIST

    def test_reordered_tokens_are_proxy_aligned(self, profiles, toy_workspace):
        score, valid = preference_proxy(profiles["u3"], "twist plot", toy_workspace.store)
        assert score == pytest.approx(1.0)
        assert valid

    def test_negative_feature_not_in_history(self, profiles):
        assert "bestseller" not in profiles["u1"].features

    def test_user_without_positive_features(self, toy_workspace):
        history = load_histories(['{"user_id": "z", "history": [{"item_id": "circe"}]}'])["z"]
        profile = build_profile(history, toy_workspace.store)
        assert np.all(profile.vector == 0)
        assert judge(profile, "greek myth", 0.0) is Alignment.INCONSISTENT


class TestMetrics:

    def _instance(self, features, item_features):
        return EvalInstance("u1", "the_rosie_project", "", FeatureSet.provided(features), frozenset(item_features))

    def test_f_ehr(self):
        assert f_ehr(self._instance(["a", "b", "c"], ["a"])) == pytest.approx(2 / 3)

    def test_unscoreable_is_none(self, profiles, toy_workspace):
        instance = self._instance([], ["a"])
        assert f_ehr(instance) is None
        assert p_ehr(instance, profiles["u1"], toy_workspace.store) is None

    def test_p_ehr(self, profiles, toy_workspace):
        instance = self._instance(["dry wit", "bestseller"], [])
        assert p_ehr(instance, profiles["u1"], toy_workspace.store) == pytest.approx(0.5)


class TestHandLabelledCorpus:

    def test_rates_and_verdicts(self, corpus, profiles, toy_workspace, expected):
        report = evaluate_corpus(corpus, profiles, toy_workspace.store)
        assert report.f_ehr == pytest.approx(expected["f_ehr"], abs=1e-9)
        assert report.p_ehr == pytest.approx(expected["p_ehr"], abs=1e-9)
        assert report.scoreable == expected["scoreable"]
        assert report.unscoreable == expected["unscoreable"]
        assert report.tau == expected["tau"]
        for got, want in zip(report.instances, expected["instances"]):
            if want["f_ehr"] is None:
                assert got.f_ehr is None and got.p_ehr is None
                continue
            assert got.f_ehr == pytest.approx(want["f_ehr"], abs=1e-9)
            assert got.p_ehr == pytest.approx(want["p_ehr"], abs=1e-9)
            verdicts = [[v.feature, v.factuality.value, v.alignment.value] for v in got.verdicts]
            assert verdicts == want["verdicts"]

    def test_histograms_cover_every_label(self, corpus, profiles, toy_workspace):
        report = evaluate_corpus(corpus, profiles, toy_workspace.store)
        assert set(report.factuality_histogram) == {f.value for f in Factuality}
        assert set(report.alignment_histogram) == {a.value for a in Alignment}
        assert sum(report.factuality_histogram.values()) == sum(len(r.verdicts) for r in report.instances)

    def test_parallel_matches_serial(self, corpus, profiles, toy_workspace):
        serial = evaluate_corpus(corpus, profiles, toy_workspace.store)
        parallel = evaluate_corpus(corpus, profiles, toy_workspace.store, jobs=4)
        assert parallel.to_dict() == serial.to_dict()

    def test_all_unscoreable(self, profiles, toy_workspace):
        instances = load_corpus(['{"user_id": "u1", "item_id": "circe", "explanation": "Nothing here."}'],
                                toy_workspace.catalog)
        with pytest.raises(UnscoreableCorpusError):
            evaluate_corpus(instances, profiles, toy_workspace.store)

    def test_missing_profile(self, toy_workspace):
        instances = load_corpus(['{"user_id": "ghost", "item_id": "circe", "features": ["greek myth"]}'],
                                toy_workspace.catalog)
        with pytest.raises(DataError):
            evaluate_corpus(instances, {}, toy_workspace.store)

    def test_malformed_record(self, toy_workspace):
        with pytest.raises(DataError):
            load_corpus(['{"item_id": "circe"}'], toy_workspace.catalog)


class TestMonotonicity:

    def test_p_ehr_non_increasing_as_tau_decreases(self, corpus, profiles, toy_workspace):
        grid = tau_grid("0:1:0.1")
        assert len(grid) == 11
        report = evaluate_corpus(corpus, profiles, toy_workspace.store, tau_values=grid)
        values = list(report.tau_sweep["p_ehr"])
        assert all(b >= a for a, b in zip(values, values[1:]))

    def test_p_ehr_non_increasing_as_history_grows(self, profiles, toy_workspace):
        features = ["bestseller", "award winner", "page turner", "dry wit", "healing"]
        instance = EvalInstance("u1", "the_rosie_project", "", FeatureSet.provided(features), frozenset())
        profile = profiles["u1"]
        previous = p_ehr(instance, profile, toy_workspace.store)
        for extra in features:
            profile = profile.with_features([extra])
            current = p_ehr(instance, profile, toy_workspace.store)
            assert current <= previous
            previous = current
        assert previous == 0.0


class TestTauGrid:

    def test_inclusive(self):
        assert tau_grid("0.2:0.4:0.1") == [0.2, 0.3, 0.4]

    @pytest.mark.parametrize("spec", ["0:1", "a:b:c", "0:1:0", "0.5:0.1:0.1", "0:2:0.5"])
    def test_invalid(self, spec):
        with pytest.raises(ValueError):
            tau_grid(spec)


class TestWriters:

    def test_json_csv_xlsx(self, tmp_path, corpus, profiles, toy_workspace):
        report = evaluate_corpus(corpus, profiles, toy_workspace.store, tau_values=tau_grid("0.3:0.5:0.1"))
        body = json.loads(write_report_json(report, tmp_path / "report.json").read_text(encoding="utf-8"))
        assert body["scoreable"] == 9
        assert len(body["tau_sweep"]) == 3

        csv_text = write_tau_sweep_csv(report, tmp_path / "tau.csv").read_text(encoding="utf-8")
        assert csv_text.splitlines()[0] == "tau,p_ehr,f_ehr"

        wb = load_workbook(write_report_xlsx(report, tmp_path / "report.xlsx"))
        assert wb.sheetnames == ["Instances", "Tau sweep"]
        assert wb["Instances"].max_row == len(report.instances) + 1

        table = format_report_table(report)
        assert "corpus F-EHR" in table

    def test_no_sweep_no_csv(self, tmp_path, corpus, profiles, toy_workspace):
        report = evaluate_corpus(corpus, profiles, toy_workspace.store)
        assert write_tau_sweep_csv(report, tmp_path / "tau.csv") is None
