import unicodedata

import pytest
from hypothesis import given, settings, strategies as st

from pvguard.errors import LexiconFormatError, UnknownId, UnknownLanguage
from pvguard.lexicon import (
    ADVERSE_EVENT,
    DRUG,
    Lexicon,
    TermEntry,
    canonical_set,
    load_lexicon_tsv,
    normalize,
)


class TestNormalize:
    def test_case_and_whitespace_folding(self):
        assert normalize("  Paracetamol ") == "paracetamol"

    def test_fullwidth_compatibility(self):
        # reference Unicode implementation oracle
        expected = unicodedata.normalize("NFKC", "ＡＢＣ").casefold()
        assert expected == "abc"
        assert normalize("ＡＢＣ") == "abc"

    def test_empty(self):
        assert normalize("") == ""

    def test_internal_whitespace_collapsed(self):
        assert normalize("warfarin \t\n sodium") == "warfarin sodium"

    @given(st.text(max_size=40))
    def test_idempotent(self, text):
        once = normalize(text)
        assert normalize(once) == once


class TestFindTerms:
    def test_single_exact_match(self, lex):
        matches = lex.find_terms("patient took paracetamol", "en", DRUG)
        assert matches == []  # paracetamol is not in the fixture lexicon
        matches = lex.find_terms("patient took warfarin daily", "en", DRUG)
        assert len(matches) == 1
        assert matches[0].canonical_id == "warfarin"
        assert matches[0].matched_surface == "warfarin"

    def test_misspelling_not_matched(self, lex):
        assert lex.find_terms("gave warfarins", "en", DRUG) == []
        assert lex.find_terms("warfarn", "en", DRUG) == []

    def test_word_boundaries_reject_inner_match(self, lex):
        assert lex.find_terms("headaches", "en", ADVERSE_EVENT) == []

    def test_ja_substring_match_with_byte_span(self, lex):
        text = "アセトアミノフェン投与"
        matches = lex.find_terms(text, "ja", DRUG)
        assert len(matches) == 1
        # independent oracle: UTF-8 byte offset of the surface inside the text
        surface = "アセトアミノフェン"
        start = text.encode("utf-8").find(surface.encode("utf-8"))
        end = start + len(surface.encode("utf-8"))
        assert (start, end) == (0, 27)
        assert matches[0].span == (0, 27)

    def test_leftmost_longest(self, lex):
        matches = lex.find_terms("took warfarin sodium today", "en", DRUG)
        assert len(matches) == 1
        assert matches[0].matched_surface == "warfarin sodium"

    def test_case_insensitive(self, lex):
        matches = lex.find_terms("Patient received TYLENOL.", "en", DRUG)
        assert [m.canonical_id for m in matches] == ["tylenol"]

    def test_unknown_language_open_set(self, lex):
        assert lex.find_terms("warfarin", "de", DRUG) == []

    def test_unknown_language_closed_set(self, lex):
        closed = Lexicon(lex.entries, closed_language_set=True)
        with pytest.raises(UnknownLanguage):
            closed.find_terms("warfarin", "de", DRUG)

    def test_every_surface_matches_its_entry(self, lex):
        for entry in lex.entries:
            for text, language in entry.surface_forms:
                matches = lex.find_terms(text, language, entry.kind)
                assert [m.canonical_id for m in matches] == [entry.canonical_id], text

    def test_spans_sorted_and_non_overlapping_per_kind(self, lex):
        text = "took warfarin and Tylenol for headache, then warfarin again"
        for kind in (DRUG, ADVERSE_EVENT):
            matches = lex.find_terms(text, "en", kind)
            for a, b in zip(matches, matches[1:]):
                assert a.span[1] <= b.span[0]


class TestNormalizeInvariance:
    @settings(max_examples=40)
    @given(st.lists(st.sampled_from([
        "warfarin", "Tylenol", "headache", "WARFARIN SODIUM", "nausea  ",
        "took", "daily", "ＷＡＲＦＡＲＩＮ",
    ]), min_size=1, max_size=6))
    def test_same_canonical_set_after_normalize(self, lex, words):
        text = " ".join(words)
        direct = canonical_set(lex.find_terms(text, "en"), DRUG)
        renorm = canonical_set(lex.find_terms(normalize(text), "en"), DRUG)
        assert direct == renorm


class TestCanonicalSet:
    def test_dedup(self, lex):
        matches = lex.find_terms("warfarin then warfarin", "en", DRUG)
        assert len(matches) == 2
        assert canonical_set(matches, DRUG) == {"warfarin"}

    def test_empty(self):
        assert canonical_set([], DRUG) == frozenset()

    def test_kind_filter(self, lex):
        matches = lex.find_terms("warfarin caused headache", "en")
        assert canonical_set(matches, DRUG) == {"warfarin"}
        assert canonical_set(matches, ADVERSE_EVENT) == {"headache"}


class TestExpandLinks:
    def test_generic_trade_closure(self, lex):
        assert lex.expand_links({"acetaminophen"}) == {
            "acetaminophen", "tylenol", "panadol"}

    def test_closure_from_trade_side(self, lex):
        assert lex.expand_links({"tylenol"}) == {"acetaminophen", "tylenol", "panadol"}

    def test_singleton_without_links(self, lex):
        assert lex.expand_links({"lisinopril"}) == {"lisinopril"}

    def test_empty(self, lex):
        assert lex.expand_links(set()) == frozenset()

    def test_unknown_id(self, lex):
        with pytest.raises(UnknownId):
            lex.expand_links({"nonexistent"})

    def test_idempotent(self, lex):
        once = lex.expand_links({"warfarin", "headache"})
        assert lex.expand_links(once) == once


class TestLexiconValidation:
    def entry(self, cid="d1", kind=DRUG, forms=(("alpha", "en"),), links=()):
        return TermEntry(canonical_id=cid, kind=kind, surface_forms=forms, links=links)

    def test_duplicate_canonical_id(self):
        with pytest.raises(LexiconFormatError):
            Lexicon([self.entry(), self.entry()])

    def test_asymmetric_links(self):
        a = self.entry(cid="a", links=("b",))
        b = self.entry(cid="b", forms=(("beta", "en"),))
        with pytest.raises(LexiconFormatError, match="asymmetric"):
            Lexicon([a, b])

    def test_shared_surface_same_kind_language(self):
        a = self.entry(cid="a")
        b = self.entry(cid="b", forms=(("ALPHA", "en"),))
        with pytest.raises(LexiconFormatError, match="shared"):
            Lexicon([a, b])

    def test_shared_surface_across_kinds_allowed(self):
        a = self.entry(cid="a")
        b = self.entry(cid="b", kind=ADVERSE_EVENT, forms=(("alpha", "en"),))
        assert len(Lexicon([a, b])) == 2

    def test_ae_links_forbidden(self):
        with pytest.raises(LexiconFormatError):
            TermEntry(canonical_id="x", kind=ADVERSE_EVENT,
                      surface_forms=(("pain", "en"),), links=("y",))

    def test_empty_surface_rejected(self):
        with pytest.raises(LexiconFormatError):
            TermEntry(canonical_id="x", kind=DRUG, surface_forms=(("  ", "en"),))


class TestTsvLoader:
    def test_fixture_loads(self, lex):
        assert len(lex) == 27
        assert lex.entry("warfarin").links == ("coumadin",)

    def test_comments_and_blanks(self, tmp_path):
        path = tmp_path / "lex.tsv"
        path.write_text("# comment\n\nd1\tdrug\ten\talpha\t\n", encoding="utf-8")
        assert len(load_lexicon_tsv(path)) == 1

    def test_links_merged_across_rows(self, tmp_path):
        path = tmp_path / "lex.tsv"
        path.write_text(
            "d1\tdrug\ten\talpha\td2\n"
            "d1\tdrug\tja\tアルファ\td2\n"
            "d2\tdrug\ten\tbeta\td1\n", encoding="utf-8")
        lexicon = load_lexicon_tsv(path)
        assert lexicon.entry("d1").links == ("d2",)
        assert len(lexicon.entry("d1").surface_forms) == 2

    def test_conflicting_kind_fails(self, tmp_path):
        path = tmp_path / "lex.tsv"
        path.write_text("d1\tdrug\ten\talpha\t\nd1\tadverse_event\ten\tbeta\t\n",
                        encoding="utf-8")
        with pytest.raises(LexiconFormatError, match="two kinds"):
            load_lexicon_tsv(path)

    def test_wrong_column_count(self, tmp_path):
        path = tmp_path / "lex.tsv"
        path.write_text("d1\tdrug\ten\n", encoding="utf-8")
        with pytest.raises(LexiconFormatError, match="columns"):
            load_lexicon_tsv(path)
