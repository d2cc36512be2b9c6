"""Hard guardrail: drug / adverse-event set differences between source and target.

A term that appears on one side with no counterpart (allowing generic-trade
neighborhoods) on the other side trips the guardrail. Set semantics: three
mentions of a drug in the source are matched by a single mention in the
target. Misspellings are invisible here by design; they are not lexicon
surface forms.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

from .errors import PreconditionViolation
from .lexicon import ADVERSE_EVENT, DRUG, Lexicon, TermMatch, canonical_set

MATCHED = "matched"
UNMATCHED = "unmatched"

PARENTHETICAL_CHECK = "parenthetical_check"
MISMATCH_GUARDRAIL = "mismatch_guardrail"


@dataclass(frozen=True)
class LabeledSpan:
    match: TermMatch
    label: str  # matched | unmatched

    def to_dict(self) -> dict:
        return {
            "canonical_id": self.match.canonical_id,
            "kind": self.match.kind,
            "start": self.match.span[0],
            "end": self.match.span[1],
            "surface": self.match.matched_surface,
            "language": self.match.language,
            "label": self.label,
        }


def missrate(found_ids: frozenset[str], unmatched_ids: frozenset[str]) -> Optional[float]:
    """|unmatched| / |found|; None (undefined, distinct from 0) when found is empty."""
    if not unmatched_ids <= found_ids:
        raise PreconditionViolation(
            f"unmatched ids {sorted(unmatched_ids - found_ids)} not among found ids")
    if not found_ids:
        return None
    return len(unmatched_ids) / len(found_ids)


@dataclass(frozen=True)
class MismatchReport:
    matched_drug_ids: frozenset[str]
    unmatched_source_drug_ids: frozenset[str]
    unmatched_target_drug_ids: frozenset[str]
    matched_ae_ids: frozenset[str]
    unmatched_source_ae_ids: frozenset[str]
    unmatched_target_ae_ids: frozenset[str]
    source_spans: tuple[LabeledSpan, ...]
    target_spans: tuple[LabeledSpan, ...]
    tripped: bool
    missrate_source_drugs: Optional[float]
    missrate_target_drugs: Optional[float]
    missrate_source_aes: Optional[float]
    missrate_target_aes: Optional[float]

    def to_dict(self) -> dict:
        return {
            "matched_drug_ids": sorted(self.matched_drug_ids),
            "unmatched_source_drug_ids": sorted(self.unmatched_source_drug_ids),
            "unmatched_target_drug_ids": sorted(self.unmatched_target_drug_ids),
            "matched_ae_ids": sorted(self.matched_ae_ids),
            "unmatched_source_ae_ids": sorted(self.unmatched_source_ae_ids),
            "unmatched_target_ae_ids": sorted(self.unmatched_target_ae_ids),
            "source_spans": [s.to_dict() for s in self.source_spans],
            "target_spans": [s.to_dict() for s in self.target_spans],
            "tripped": self.tripped,
            "missrates": {
                "source_drugs": self.missrate_source_drugs,
                "target_drugs": self.missrate_target_drugs,
                "source_aes": self.missrate_source_aes,
                "target_aes": self.missrate_target_aes,
            },
        }


@dataclass(frozen=True)
class GenericTradeCheck:
    """Outcome of the parenthetical "NAME1 (NAME2)" consistency sweep."""

    pairs_checked: tuple[tuple[str, str, bool], ...]  # (generic_id, trade_id, consistent)
    method: str = PARENTHETICAL_CHECK

    @property
    def consistent(self) -> bool:
        return all(ok for _, _, ok in self.pairs_checked)

    def to_dict(self) -> dict:
        return {
            "pairs_checked": [
                {"generic_id": g, "trade_id": t, "consistent": ok}
                for g, t, ok in self.pairs_checked
            ],
            "method": self.method,
        }


def _label(matches: list[TermMatch], unmatched_drugs: frozenset[str],
           unmatched_aes: frozenset[str]) -> tuple[LabeledSpan, ...]:
    out = []
    for m in matches:
        unmatched = unmatched_drugs if m.kind == DRUG else unmatched_aes
        out.append(LabeledSpan(m, UNMATCHED if m.canonical_id in unmatched else MATCHED))
    return tuple(out)


def run_mismatch(
    source: tuple[str, str],
    target: tuple[str, str],
    lexicon: Lexicon,
) -> MismatchReport:
    """Compare term sets of (text, language) source and target.

    Both sides are matched independently, canonical id sets are expanded
    through generic-trade links, and each side's unmatched set is the ids
    actually mentioned there with no counterpart in the other side's expanded
    neighborhood. Empty texts yield empty sets and tripped=False.
    """
    source_text, source_lang = source
    target_text, target_lang = target
    src_matches = lexicon.find_terms(source_text, source_lang)
    tgt_matches = lexicon.find_terms(target_text, target_lang)

    unmatched: dict[tuple[str, str], frozenset[str]] = {}
    matched: dict[str, frozenset[str]] = {}
    for kind in (DRUG, ADVERSE_EVENT):
        src_ids = canonical_set(src_matches, kind)
        tgt_ids = canonical_set(tgt_matches, kind)
        src_expanded = lexicon.expand_links(src_ids)
        tgt_expanded = lexicon.expand_links(tgt_ids)
        unmatched[("source", kind)] = frozenset(src_ids - tgt_expanded)
        unmatched[("target", kind)] = frozenset(tgt_ids - src_expanded)
        matched[kind] = frozenset(
            (src_ids - unmatched[("source", kind)]) | (tgt_ids - unmatched[("target", kind)]))

    tripped = any(unmatched.values())
    src_drug_ids = canonical_set(src_matches, DRUG)
    tgt_drug_ids = canonical_set(tgt_matches, DRUG)
    src_ae_ids = canonical_set(src_matches, ADVERSE_EVENT)
    tgt_ae_ids = canonical_set(tgt_matches, ADVERSE_EVENT)

    return MismatchReport(
        matched_drug_ids=matched[DRUG],
        unmatched_source_drug_ids=unmatched[("source", DRUG)],
        unmatched_target_drug_ids=unmatched[("target", DRUG)],
        matched_ae_ids=matched[ADVERSE_EVENT],
        unmatched_source_ae_ids=unmatched[("source", ADVERSE_EVENT)],
        unmatched_target_ae_ids=unmatched[("target", ADVERSE_EVENT)],
        source_spans=_label(src_matches, unmatched[("source", DRUG)],
                            unmatched[("source", ADVERSE_EVENT)]),
        target_spans=_label(tgt_matches, unmatched[("target", DRUG)],
                            unmatched[("target", ADVERSE_EVENT)]),
        tripped=tripped,
        missrate_source_drugs=missrate(src_drug_ids, unmatched[("source", DRUG)]),
        missrate_target_drugs=missrate(tgt_drug_ids, unmatched[("target", DRUG)]),
        missrate_source_aes=missrate(src_ae_ids, unmatched[("source", ADVERSE_EVENT)]),
        missrate_target_aes=missrate(tgt_ae_ids, unmatched[("target", ADVERSE_EVENT)]),
    )


def check_generic_trade(target: str, lexicon: Lexicon, language: str = "en") -> GenericTradeCheck:
    """Check "NAME1 (NAME2)" drug pairs in the target for link consistency.

    The parenthesized name is recorded as the generic, the outer name as the
    trade name; consistent=True iff the two ids are link-connected.
    """
    matches = [m for m in lexicon.find_terms(target, language) if m.kind == DRUG]
    data = target.encode("utf-8")
    pairs = []
    for first, second in zip(matches, matches[1:]):
        gap = data[first.span[1]:second.span[0]].decode("utf-8")
        tail = data[second.span[1]:].decode("utf-8")
        if gap.strip() == "(" and tail.lstrip().startswith(")"):
            outer, inner = first.canonical_id, second.canonical_id
            consistent = inner in lexicon.expand_links({outer})
            pairs.append((inner, outer, consistent))
    return GenericTradeCheck(pairs_checked=tuple(pairs), method=PARENTHETICAL_CHECK)
