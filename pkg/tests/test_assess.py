import pytest

from pvguard.assess import AssessmentOptions, run_assessment_suite
from pvguard.errors import FixtureMissing


@pytest.fixture(scope="module")
def summary():
    return run_assessment_suite(AssessmentOptions(
        profile="separable", seed=1, trials=40, n_cache=30, strata_size=12))


class TestAssessmentSuite:
    def test_separable_auroc_is_one(self, summary):
        assert summary.dluq_auroc == 1.0

    def test_never_event_catch_rate(self, summary):
        caught, applied = summary.catch_counts["hallucinate_drug"]
        assert applied == 40
        assert caught == 40
        assert summary.catch_rate_by_kind["hallucinate_drug"] == 1.0

    def test_stealth_corruptions_never_caught(self, summary):
        assert summary.catch_rate_by_kind["misspell_drug_only"] == 0.0
        assert summary.catch_rate_by_kind["misspell_drug_with_duplicate"] == 0.0
        assert summary.catch_rate_by_kind["swap_date"] == 0.0
        assert summary.catch_rate_by_kind["nonsense_phrase"] == 0.0

    def test_drop_ae_caught(self, summary):
        assert summary.catch_rate_by_kind["drop_ae"] == 1.0

    def test_faithful_missrates_all_zero(self, summary):
        faithful = [r for r in summary.missrate_rows if r[0] == "faithful"]
        assert faithful
        assert all(rate == 0.0 for _, _, _, rate in faithful)

    def test_drop_ae_missrates_positive(self, summary):
        rows = [r for r in summary.missrate_rows if r[0] == "drop_ae"]
        assert rows
        assert all(rate > 0.0 for _, _, _, rate in rows)

    def test_score_rows_have_three_groups(self, summary):
        groups = {g for g, _, _ in summary.score_rows}
        assert groups == {"training", "validation", "extraneous"}

    def test_strata_comparisons_present(self, summary):
        assert summary.strata_sizes["faithful"] == 12
        pairs = {tuple(c["pair"]) for c in summary.comparisons}
        assert ("faithful", "hallucinate_drug") in pairs
        for c in summary.comparisons:
            assert 0.0 <= c["raw_p"] <= 1.0
            assert c["adjusted_p"] <= 1.0
            assert c["adjusted_p"] >= min(1.0, c["raw_p"] * 9) - 1e-12

    def test_missing_lexicon_fixture(self):
        with pytest.raises(FixtureMissing):
            run_assessment_suite(AssessmentOptions(lexicon_path="/nonexistent.tsv"))

    def test_noisy_profile_above_floor(self):
        noisy = run_assessment_suite(AssessmentOptions(
            profile="noisy", seed=1, trials=5, n_cache=30, strata_size=5))
        assert noisy.dluq_auroc >= 0.90

    def test_summary_dict_shape(self, summary):
        obj = summary.to_dict()
        assert obj["dluq"]["n_in"] == 80
        assert obj["dluq"]["n_extraneous"] == 25
        assert obj["mismatch"]["never_event_catch_rate"] == 1.0
        assert obj["tluq"]["bonferroni_trials"] == 9
