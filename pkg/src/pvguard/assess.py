"""Batch guardrail assessment: anomaly-gate AUROC over an injected corpus,
catch rates per corruption kind against injector truth, missrate
distributions, and entropy-score strata comparisons.

Everything is mock-driven and seed-reproducible; the output is a
machine-readable summary plus plot-ready CSV rows.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path
from typing import Optional

from .adapter import (
    CORRUPTION_KINDS,
    DROP_AE,
    HALLUCINATE_DRUG,
    MISSPELL_DRUG_ONLY,
    MISSPELL_DRUG_WITH_DUPLICATE,
    NONSENSE_PHRASE,
    CorruptionSpec,
    MockAdapter,
)
from .config import DEFAULT_INSTRUCTION
from .corpus import fixture_lexicon, synthesize_corpus
from .dluq import build_cache, calibrate_threshold, leave_one_out_scores, pool_embedding, score_document
from .errors import FixtureMissing
from .icsr import serialize_body, serialize_for_model
from .lexicon import Lexicon, load_lexicon_tsv
from .metrics import auroc
from .mismatch import run_mismatch
from .pipeline import canonical_json
from .tluq import annotate, compare_strata


@dataclass(frozen=True)
class AssessmentOptions:
    profile: str = "separable"
    seed: int = 1
    trials: int = 1000
    n_cache: int = 60
    n_in: int = 80          # scored in-corpus documents
    n_extraneous: int = 25  # injected non-reports
    k: int = 1
    calibration_fpr: float = 0.05
    strata_size: int = 40
    bonferroni_trials: int = 9
    lexicon_path: Optional[str] = None


@dataclass
class AssessmentSummary:
    options: AssessmentOptions
    dluq_auroc: float
    dluq_threshold_marker: float
    score_rows: list[tuple[str, str, float]]          # (group, doc_id, score)
    catch_rate_by_kind: dict[str, float]
    catch_counts: dict[str, tuple[int, int]]          # kind -> (caught, applied)
    missrate_rows: list[tuple[str, str, str, float]]  # (scenario, side, kind, missrate)
    strata_sizes: dict[str, int]
    comparisons: list[dict]

    def to_dict(self) -> dict:
        return {
            "profile": self.options.profile,
            "seed": self.options.seed,
            "trials": self.options.trials,
            "dluq": {
                "auroc": self.dluq_auroc,
                "n_in": self.options.n_in,
                "n_extraneous": self.options.n_extraneous,
                "k": self.options.k,
                "threshold_marker": self.dluq_threshold_marker,
            },
            "mismatch": {
                "never_event_catch_rate": self.catch_rate_by_kind.get(HALLUCINATE_DRUG),
                "catch_rate_by_kind": self.catch_rate_by_kind,
                "catch_counts": {k: list(v) for k, v in self.catch_counts.items()},
            },
            "tluq": {
                "strata_sizes": self.strata_sizes,
                "bonferroni_trials": self.options.bonferroni_trials,
                "comparisons": self.comparisons,
            },
        }


def _load_lexicon(options: AssessmentOptions) -> Lexicon:
    if options.lexicon_path is None:
        return fixture_lexicon()
    path = Path(options.lexicon_path)
    if not path.exists():
        raise FixtureMissing(f"lexicon fixture not found: {path}")
    return load_lexicon_tsv(path)


def _dluq_assessment(options: AssessmentOptions, lex: Lexicon, adapter: MockAdapter):
    cache_docs = [d for d, _ in synthesize_corpus(options.n_cache, 0, options.seed + 1, lex)]
    cache = build_cache(cache_docs, adapter, source_corpus_tag=f"assess-{options.seed}")
    threshold = calibrate_threshold(
        leave_one_out_scores(cache, k=options.k), options.calibration_fpr)

    rows: list[tuple[str, str, float]] = []
    for doc_id, score in zip(cache.doc_ids, leave_one_out_scores(cache, k=options.k)):
        rows.append(("training", doc_id, score))
    scores, labels = [], []
    for doc, label in synthesize_corpus(options.n_in, options.n_extraneous,
                                        options.seed + 2, lex):
        if label == "icsr":
            text = serialize_body(doc)
            group, doc_id = "validation", doc.case_id
        else:
            text = doc.text
            group, doc_id = "extraneous", doc.doc_id
        value = score_document(pool_embedding(adapter.embed_source(text)),
                               cache, k=options.k).distance
        rows.append((group, doc_id, value))
        scores.append(value)
        labels.append("neg" if label == "icsr" else "pos")
    return auroc(scores, labels), threshold, rows


def _corruption_assessment(options: AssessmentOptions, lex: Lexicon, adapter: MockAdapter):
    """Catch rates per corruption kind, judged against injector truth."""
    src_lang = adapter.source_language
    tgt_lang = adapter.target_language
    docs = [d for d, _ in synthesize_corpus(options.trials, 0, options.seed + 3, lex)]
    catch_counts: dict[str, tuple[int, int]] = {}
    missrate_rows: list[tuple[str, str, str, float]] = []
    entropies_by_stratum: dict[str, list[float]] = {"faithful": []}

    # faithful baseline: every defined missrate should be 0.0
    for doc in docs[:min(options.trials, 200)]:
        body = serialize_body(doc)
        result = adapter.translate(serialize_for_model(doc, DEFAULT_INSTRUCTION))
        report = run_mismatch((body, src_lang), (result.target_text, tgt_lang), lex)
        for side, kind, rate in (
            ("source", "drug", report.missrate_source_drugs),
            ("target", "drug", report.missrate_target_drugs),
            ("source", "adverse_event", report.missrate_source_aes),
            ("target", "adverse_event", report.missrate_target_aes),
        ):
            if rate is not None:
                missrate_rows.append(("faithful", side, kind, rate))
        if len(entropies_by_stratum["faithful"]) < options.strata_size:
            entropies_by_stratum["faithful"].append(
                annotate(result.tokens).case_entropy)

    for kind in CORRUPTION_KINDS:
        caught = applied = 0
        for i, doc in enumerate(docs):
            armed = adapter.armed(CorruptionSpec(kind, seed=options.seed * 1_000_000 + i))
            body = serialize_body(doc)
            result = armed.translate(serialize_for_model(doc, DEFAULT_INSTRUCTION))
            truth = result.corruption_truth
            if truth is None or not truth.applied:
                continue
            applied += 1
            report = run_mismatch((body, src_lang), (result.target_text, tgt_lang), lex)
            if kind == HALLUCINATE_DRUG:
                hit = report.tripped and truth.canonical_id in report.unmatched_target_drug_ids
            elif kind == DROP_AE:
                hit = report.tripped and truth.canonical_id in report.unmatched_source_ae_ids
                if report.missrate_source_aes is not None:
                    missrate_rows.append(
                        ("drop_ae", "source", "adverse_event", report.missrate_source_aes))
            else:
                hit = report.tripped
            caught += int(hit)
            if kind in (HALLUCINATE_DRUG, NONSENSE_PHRASE):
                stratum = entropies_by_stratum.setdefault(kind, [])
                if len(stratum) < options.strata_size:
                    stratum.append(annotate(result.tokens).case_entropy)
        catch_counts[kind] = (caught, applied)
    rates = {kind: (c / a if a else 0.0) for kind, (c, a) in catch_counts.items()}
    return rates, catch_counts, missrate_rows, entropies_by_stratum


def run_assessment_suite(
    options: AssessmentOptions = AssessmentOptions(),
    output_dir: Optional[str] = None,
) -> AssessmentSummary:
    """Run all guardrail assessments; optionally write summary JSON and CSVs."""
    lex = _load_lexicon(options)
    adapter = MockAdapter(lexicon=lex, profile=options.profile, seed=options.seed)

    dluq_auroc, threshold, score_rows = _dluq_assessment(options, lex, adapter)
    rates, counts, missrate_rows, strata = _corruption_assessment(options, lex, adapter)
    strata = {label: values for label, values in strata.items() if values}
    comparisons = []
    if len(strata) >= 2:
        comparisons = [
            c.to_dict()
            for c in compare_strata(strata, n_trials=options.bonferroni_trials)
        ]

    summary = AssessmentSummary(
        options=options,
        dluq_auroc=dluq_auroc,
        dluq_threshold_marker=threshold,
        score_rows=score_rows,
        catch_rate_by_kind=rates,
        catch_counts=counts,
        missrate_rows=missrate_rows,
        strata_sizes={k: len(v) for k, v in strata.items()},
        comparisons=comparisons,
    )

    if output_dir is not None:
        out = Path(output_dir)
        out.mkdir(parents=True, exist_ok=True)
        (out / "summary.json").write_text(
            canonical_json(summary.to_dict()) + "\n", encoding="utf-8")
        with open(out / "dluq_scores.csv", "w", newline="", encoding="utf-8") as fh:
            writer = csv.writer(fh)
            writer.writerow(["group", "doc_id", "score"])
            writer.writerows(summary.score_rows)
        with open(out / "missrates.csv", "w", newline="", encoding="utf-8") as fh:
            writer = csv.writer(fh)
            writer.writerow(["scenario", "side", "kind", "missrate"])
            writer.writerows(summary.missrate_rows)
        with open(out / "catch_rates.csv", "w", newline="", encoding="utf-8") as fh:
            writer = csv.writer(fh)
            writer.writerow(["corruption_kind", "caught", "applied", "catch_rate"])
            for kind, (caught, applied) in summary.catch_counts.items():
                writer.writerow([kind, caught, applied, summary.catch_rate_by_kind[kind]])
        with open(out / "strata_entropy.csv", "w", newline="", encoding="utf-8") as fh:
            writer = csv.writer(fh)
            writer.writerow(["stratum", "case_entropy"])
            for stratum, values in strata.items():
                for value in values:
                    writer.writerow([stratum, value])
    return summary
