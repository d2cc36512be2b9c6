"""Sequential guardrail orchestration: anomaly gate, translate, term check,
entropy annotation, routing.

A flagged anomaly gate rejects the case before the model is ever invoked.
Term mismatches and generic-trade inconsistencies escalate to human review,
never to rejection. Stage failures are captured into the report and routed to
review; no case is ever dropped.
"""

from __future__ import annotations

import html
import json
import time
from dataclasses import dataclass
from typing import Any, Mapping, Optional

from . import __version__
from .config import PipelineConfig, parse_threshold
from .dluq import (
    FLAG,
    DluqScore,
    EmbeddingCache,
    calibrate_threshold,
    leave_one_out_scores,
    pool_embedding,
    score_document,
)
from .errors import SpanOutOfBounds
from .icsr import IcsrDocument, serialize_body, serialize_for_model
from .lexicon import Lexicon
from .mismatch import (
    GenericTradeCheck,
    LabeledSpan,
    MismatchReport,
    TermMatch,
    check_generic_trade,
    run_mismatch,
)
from .tluq import TluqAnnotation, annotate

REPORT_SCHEMA_VERSION = 1

AUTO_PASS = "auto_pass"
REVIEW = "review"
REJECT = "reject"

@dataclass(frozen=True)
class GuardrailReport:
    case_id: str
    pipeline_version: str
    routing: str
    routing_reasons: tuple[str, ...]
    dluq: Optional[DluqScore] = None
    mismatch: Optional[MismatchReport] = None
    generic_trade: Optional[GenericTradeCheck] = None
    tluq: Optional[TluqAnnotation] = None
    stage_errors: tuple[tuple[str, str], ...] = ()
    timing: tuple[tuple[str, float], ...] = ()
    extra: tuple[tuple[str, Any], ...] = ()  # unknown fields preserved on read

    def to_dict(self, include_timing: bool = False) -> dict:
        out: dict[str, Any] = {
            "schema_version": REPORT_SCHEMA_VERSION,
            "case_id": self.case_id,
            "pipeline_version": self.pipeline_version,
            "routing": self.routing,
            "routing_reasons": list(self.routing_reasons),
            "dluq": self.dluq.to_dict() if self.dluq else None,
            "mismatch": self.mismatch.to_dict() if self.mismatch else None,
            "generic_trade": self.generic_trade.to_dict() if self.generic_trade else None,
            "tluq": self.tluq.to_dict() if self.tluq else None,
            "stage_errors": [{"stage": s, "error": e} for s, e in self.stage_errors],
        }
        for key, value in self.extra:
            out.setdefault(key, value)
        if include_timing:
            out["timing"] = {stage: seconds for stage, seconds in self.timing}
        return out


_KNOWN_REPORT_KEYS = {
    "schema_version", "case_id", "pipeline_version", "routing", "routing_reasons",
    "dluq", "mismatch", "generic_trade", "tluq", "stage_errors", "timing",
}


def _mismatch_from_dict(obj: dict) -> MismatchReport:
    def spans(rows):
        return tuple(
            LabeledSpan(
                TermMatch(
                    canonical_id=r["canonical_id"], kind=r["kind"],
                    span=(r["start"], r["end"]), matched_surface=r["surface"],
                    language=r["language"]),
                r["label"])
            for r in rows)
    rates = obj["missrates"]
    return MismatchReport(
        matched_drug_ids=frozenset(obj["matched_drug_ids"]),
        unmatched_source_drug_ids=frozenset(obj["unmatched_source_drug_ids"]),
        unmatched_target_drug_ids=frozenset(obj["unmatched_target_drug_ids"]),
        matched_ae_ids=frozenset(obj["matched_ae_ids"]),
        unmatched_source_ae_ids=frozenset(obj["unmatched_source_ae_ids"]),
        unmatched_target_ae_ids=frozenset(obj["unmatched_target_ae_ids"]),
        source_spans=spans(obj["source_spans"]),
        target_spans=spans(obj["target_spans"]),
        tripped=obj["tripped"],
        missrate_source_drugs=rates["source_drugs"],
        missrate_target_drugs=rates["target_drugs"],
        missrate_source_aes=rates["source_aes"],
        missrate_target_aes=rates["target_aes"],
    )


def report_from_dict(obj: dict) -> GuardrailReport:
    """Rebuild a report, preserving unknown top-level fields verbatim."""
    dluq = obj.get("dluq")
    tluq = obj.get("tluq")
    gt = obj.get("generic_trade")
    extra = tuple(sorted(
        (k, v) for k, v in obj.items() if k not in _KNOWN_REPORT_KEYS))
    return GuardrailReport(
        case_id=obj["case_id"],
        pipeline_version=obj["pipeline_version"],
        routing=obj["routing"],
        routing_reasons=tuple(obj["routing_reasons"]),
        dluq=DluqScore(
            distance=dluq["distance"], k_used=dluq["k_used"],
            nearest_ids=tuple(dluq["nearest_ids"]), verdict=dluq["verdict"],
        ) if dluq else None,
        mismatch=_mismatch_from_dict(obj["mismatch"]) if obj.get("mismatch") else None,
        generic_trade=GenericTradeCheck(
            pairs_checked=tuple(
                (p["generic_id"], p["trade_id"], p["consistent"])
                for p in gt["pairs_checked"]),
            method=gt["method"],
        ) if gt else None,
        tluq=TluqAnnotation(
            token_entropies=tuple(tluq["token_entropies"]),
            case_entropy=tluq["case_entropy"],
            flagged_spans=tuple(
                ((s["start"], s["end"]), s["level"]) for s in tluq["flagged_spans"]),
            truncated=tluq["truncated"],
            empty=tluq["empty"],
        ) if tluq else None,
        stage_errors=tuple((e["stage"], e["error"]) for e in obj.get("stage_errors", ())),
        timing=tuple((k, v) for k, v in obj.get("timing", {}).items()),
        extra=extra,
    )


def _round_floats(obj):
    if isinstance(obj, float):
        return float(format(obj, ".9g"))
    if isinstance(obj, dict):
        return {k: _round_floats(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_round_floats(v) for v in obj]
    return obj


def canonical_json(obj: Mapping) -> str:
    """Deterministic JSON: sorted keys, compact, floats at 9 significant digits."""
    return json.dumps(_round_floats(obj), sort_keys=True, separators=(",", ":"),
                      ensure_ascii=False, allow_nan=False)


def report_json(report: GuardrailReport) -> str:
    return canonical_json(report.to_dict())


@dataclass(frozen=True)
class CaseResult:
    """Report plus the texts it annotates (needed for review and rendering)."""

    report: GuardrailReport
    source_text: str
    target_text: str
    corruption_truth: Optional[object] = None


def resolve_dluq_threshold(config: PipelineConfig, cache: Optional[EmbeddingCache]) -> float:
    """Fixed threshold, or the calibrated quantile of the cache's
    leave-one-out self-scores for "calibrated:<fpr>"."""
    fixed, fpr = parse_threshold(config.dluq_threshold)
    if fixed is not None:
        return fixed
    if cache is None:
        return float("inf")
    return calibrate_threshold(leave_one_out_scores(cache, k=config.k), fpr)


def run_case(
    doc: IcsrDocument,
    config: PipelineConfig,
    adapter,
    lexicon: Lexicon,
    cache: Optional[EmbeddingCache],
    dluq_threshold: Optional[float] = None,
) -> CaseResult:
    """Run the guardrail stages in order and route the case.

    Stage order is fixed: anomaly gate, then translation, then term mismatch
    (plus the generic-trade sweep), then token-entropy annotation. A flagged
    gate short-circuits: the adapter's translate is never invoked. Any stage
    exception is captured as stage_error:<stage> and routes the case to
    review.
    """
    if dluq_threshold is None:
        dluq_threshold = resolve_dluq_threshold(config, cache)
    source_text = serialize_body(doc)
    target_text = ""
    timing: list[tuple[str, float]] = []
    stage_errors: list[tuple[str, str]] = []
    reasons: list[str] = []
    dluq_score = mismatch_report = generic_trade = tluq_annotation = None
    generation = None

    def run_stage(name, fn):
        nonlocal stage_errors
        started = time.perf_counter()
        try:
            return fn()
        except Exception as exc:  # captured, never dropped
            stage_errors.append((name, f"{type(exc).__name__}: {exc}"))
            return None
        finally:
            timing.append((name, time.perf_counter() - started))

    if cache is not None:
        def dluq_stage():
            pooled = pool_embedding(adapter.embed_source(source_text))
            return score_document(pooled, cache, k=config.k, threshold=dluq_threshold)
        dluq_score = run_stage("dluq", dluq_stage)

    if dluq_score is not None and dluq_score.verdict == FLAG:
        reasons.append("dluq:distance_above_threshold")
        report = GuardrailReport(
            case_id=doc.case_id,
            pipeline_version=__version__,
            routing=REJECT,
            routing_reasons=tuple(reasons),
            dluq=dluq_score,
            stage_errors=tuple(stage_errors),
            timing=tuple(timing),
        )
        return CaseResult(report, source_text, target_text)

    generation = run_stage("translate", lambda: adapter.translate(
        serialize_for_model(doc, config.instruction)))

    if generation is not None:
        target_text = generation.target_text
        src_lang = config.adapter.source_language
        tgt_lang = config.adapter.target_language
        mismatch_report = run_stage("mismatch", lambda: run_mismatch(
            (source_text, src_lang), (target_text, tgt_lang), lexicon))
        generic_trade = run_stage("generic_trade", lambda: check_generic_trade(
            target_text, lexicon, language=tgt_lang))
        tluq_annotation = run_stage("tluq", lambda: annotate(
            generation.tokens,
            global_thresholds=(config.tluq_global_thresholds
                               if config.tluq_mode == "global" else None)))

    for stage, _ in stage_errors:
        reasons.append(f"stage_error:{stage}")
    if mismatch_report is not None and mismatch_report.tripped:
        if mismatch_report.unmatched_source_drug_ids:
            reasons.append("mismatch:unmatched_source_drug")
        if mismatch_report.unmatched_target_drug_ids:
            reasons.append("mismatch:unmatched_target_drug")
        if mismatch_report.unmatched_source_ae_ids:
            reasons.append("mismatch:unmatched_source_ae")
        if mismatch_report.unmatched_target_ae_ids:
            reasons.append("mismatch:unmatched_target_ae")
    if generic_trade is not None and not generic_trade.consistent:
        reasons.append("generic_trade:inconsistent")
    if (config.review_entropy_threshold is not None and tluq_annotation is not None
            and tluq_annotation.case_entropy > config.review_entropy_threshold):
        reasons.append("tluq:case_entropy_above_threshold")

    routing = REVIEW if reasons else AUTO_PASS
    report = GuardrailReport(
        case_id=doc.case_id,
        pipeline_version=__version__,
        routing=routing,
        routing_reasons=tuple(reasons),
        dluq=dluq_score,
        mismatch=mismatch_report,
        generic_trade=generic_trade,
        tluq=tluq_annotation,
        stage_errors=tuple(stage_errors),
        timing=tuple(timing),
    )
    truth = generation.corruption_truth if generation is not None else None
    return CaseResult(report, source_text, target_text, corruption_truth=truth)


def process_case(
    doc: IcsrDocument,
    config: PipelineConfig,
    adapter,
    lexicon: Lexicon,
    cache: Optional[EmbeddingCache] = None,
    dluq_threshold: Optional[float] = None,
) -> GuardrailReport:
    """The guardrail flow of run_case, returning just the report."""
    return run_case(doc, config, adapter, lexicon, cache, dluq_threshold).report


# --- annotated HTML -----------------------------------------------------------

_SPAN_CLASSES = {
    ("drug", "matched"): "drug-matched",
    ("drug", "unmatched"): "drug-unmatched",
    ("adverse_event", "matched"): "ae-matched",
    ("adverse_event", "unmatched"): "ae-unmatched",
}

_TLUQ_CLASSES = {"L1": "tluq-l1", "L2": "tluq-l2", "L3": "tluq-l3"}

_STYLE = """
body { font-family: sans-serif; margin: 2em; }
.panel { border: 1px solid #ccc; padding: 1em; margin-bottom: 1em; }
.text { white-space: pre-wrap; line-height: 1.8; }
.ae-matched { background-color: #1f77b4; color: #fff; }
.ae-unmatched { background-color: #ffd54d; }
.drug-matched { background-color: #2ca02c; color: #fff; }
.drug-unmatched { background-color: #d62728; color: #fff; }
.tluq-l1 { background-color: #fbe3e3; }
.tluq-l2 { background-color: #f5a8a8; }
.tluq-l3 { background-color: #e85050; color: #fff; }
.legend span { margin-right: 1em; padding: 0 0.4em; }
"""


def _annotate_text(text: str, layers: list[tuple[tuple[int, int], str]]) -> str:
    """Render text with possibly-overlapping byte-span layers as HTML."""
    data = text.encode("utf-8")
    for (start, end), css in layers:
        if not (0 <= start <= end <= len(data)):
            raise SpanOutOfBounds(f"span ({start}, {end}) outside text of {len(data)} bytes")
    bounds = {0, len(data)}
    for (start, end), _ in layers:
        bounds.update((start, end))
    cuts = sorted(bounds)
    parts = []
    for a, b in zip(cuts, cuts[1:]):
        classes = [css for (s, e), css in layers if s <= a and b <= e]
        segment = html.escape(data[a:b].decode("utf-8"))
        if classes:
            parts.append(f'<span class="{" ".join(dict.fromkeys(classes))}">{segment}</span>')
        else:
            parts.append(segment)
    return "".join(parts)


def render_annotated_html(report: GuardrailReport, source: str, target: str) -> str:
    """Side-by-side annotated rendering of one processed case.

    Matched/unmatched drug and AE spans colorize both panels; entropy bands
    add three increasing red saturations to the target. All text content is
    HTML-escaped.
    """
    source_layers: list[tuple[tuple[int, int], str]] = []
    target_layers: list[tuple[tuple[int, int], str]] = []
    if report.mismatch is not None:
        for labeled in report.mismatch.source_spans:
            css = _SPAN_CLASSES[(labeled.match.kind, labeled.label)]
            source_layers.append((labeled.match.span, css))
        for labeled in report.mismatch.target_spans:
            css = _SPAN_CLASSES[(labeled.match.kind, labeled.label)]
            target_layers.append((labeled.match.span, css))
    if report.tluq is not None:
        for span, level in report.tluq.flagged_spans:
            target_layers.append((span, _TLUQ_CLASSES[level]))

    legend = (
        '<div class="legend">'
        '<span class="drug-matched">matched drug</span>'
        '<span class="drug-unmatched">unmatched drug</span>'
        '<span class="ae-matched">matched AE</span>'
        '<span class="ae-unmatched">unmatched AE</span>'
        '<span class="tluq-l1">entropy L1</span>'
        '<span class="tluq-l2">entropy L2</span>'
        '<span class="tluq-l3">entropy L3</span>'
        "</div>"
    )
    return (
        "<!DOCTYPE html>\n<html><head><meta charset=\"utf-8\">"
        f"<title>{html.escape(report.case_id)}</title>"
        f"<style>{_STYLE}</style></head><body>"
        f"<h1>Case {html.escape(report.case_id)}</h1>"
        f"<p>Routing: <strong>{html.escape(report.routing)}</strong> "
        f"({html.escape(', '.join(report.routing_reasons) or 'no guardrail triggered')})</p>"
        f"{legend}"
        f'<div class="panel source"><h2>Source</h2>'
        f'<div class="text">{_annotate_text(source, source_layers)}</div></div>'
        f'<div class="panel target"><h2>Target</h2>'
        f'<div class="text">{_annotate_text(target, target_layers)}</div></div>'
        "</body></html>"
    )
