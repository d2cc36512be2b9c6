"""Command-line interface.

Subcommands: ingest, synth, build-cache, calibrate, run, assess, eval, serve.
Diagnostics go to stderr; data goes to files or stdout. Exit codes: 0 success,
1 validation error, 2 runtime stage failure.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import os
import sys
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path
from typing import Optional

from . import __version__
from .adapter import HttpAdapter, MockAdapter
from .assess import AssessmentOptions, run_assessment_suite
from .config import (
    HTTP,
    MOCK,
    PipelineConfig,
    Seeds,
    dump_toml,
    load_config,
)
from .corpus import ExtraneousDoc, fixture_lexicon, synthesize_corpus
from .dluq import EmbeddingCache, build_cache, calibrate_threshold, pool_embedding, score_document
from .errors import (
    AdapterUnavailable,
    CacheFormatError,
    ConfigError,
    FixtureMissing,
    LexiconFormatError,
    MalformedDocument,
    MissingRequiredField,
    ProtocolError,
    PvGuardError,
    UnsupportedFormat,
)
from .icsr import (
    check_validity,
    document_from_dict,
    document_to_dict,
    parse_document,
)
from .lexicon import load_lexicon_tsv
from .metrics import auroc, bleu, tokenize_for_bleu, word_error_rate
from .pipeline import (
    GuardrailReport,
    REVIEW,
    canonical_json,
    report_json,
    resolve_dluq_threshold,
    run_case,
)
from .review import ReviewStore
from .service import create_app

_VALIDATION_ERRORS = (
    ConfigError, MalformedDocument, MissingRequiredField, UnsupportedFormat,
    LexiconFormatError, FixtureMissing, CacheFormatError,
)


def _fail(args, exc: Exception, code: int) -> int:
    if getattr(args, "format", "text") == "json":
        print(json.dumps({"error": {
            "code": type(exc).__name__, "message": str(exc)}}), file=sys.stderr)
    else:
        print(f"error: {exc}", file=sys.stderr)
    return code


def _load_effective_config(args) -> PipelineConfig:
    config = load_config(args.config)
    if getattr(args, "seed", None) is not None:
        config = dataclasses.replace(
            config, seeds=Seeds(adapter=args.seed, corpus=args.seed + 1))
    return config


def build_components(config: PipelineConfig):
    """(adapter, lexicon, cache) per the configured settings."""
    lexicon = (load_lexicon_tsv(config.lexicon_path)
               if config.lexicon_path else fixture_lexicon())
    cache = EmbeddingCache.load(config.cache_path) if config.cache_path else None
    if config.adapter.type == MOCK:
        adapter = MockAdapter(
            lexicon=lexicon,
            profile=config.adapter.profile,
            seed=config.seeds.adapter,
            source_language=config.adapter.source_language,
            target_language=config.adapter.target_language,
        )
    else:
        adapter = HttpAdapter(
            endpoint=config.adapter.endpoint,
            timeout=config.adapter.timeout,
            retries=config.adapter.retries,
        )
    return adapter, lexicon, cache


def _maybe_dump_config(args, config: PipelineConfig) -> bool:
    if getattr(args, "dump_config", False):
        sys.stdout.write(dump_toml(config))
        return True
    return False


# --- subcommands ---------------------------------------------------------------

def _cmd_ingest(args) -> int:
    out_fh = open(args.out, "w", encoding="utf-8") if args.out else None
    failures = 0
    try:
        for path in args.files:
            try:
                doc = parse_document(Path(path).read_bytes(), format=args.doc_format)
            except PvGuardError as exc:
                failures += 1
                print(f"error: {path}: {exc}", file=sys.stderr)
                continue
            verdict = check_validity(doc)
            print(json.dumps({
                "case_id": doc.case_id,
                "valid": verdict.valid,
                "missing_elements": sorted(verdict.missing_elements),
            }, ensure_ascii=False))
            if out_fh:
                out_fh.write(json.dumps(document_to_dict(doc), ensure_ascii=False) + "\n")
    finally:
        if out_fh:
            out_fh.close()
    return 1 if failures else 0


def _cmd_synth(args) -> int:
    seed = args.seed if args.seed is not None else 1
    corpus = synthesize_corpus(args.n_icsr, args.n_extraneous, seed)
    with open(args.out, "w", encoding="utf-8") as fh:
        for item, label in corpus:
            if isinstance(item, ExtraneousDoc):
                obj = {"label": label, "category": item.category,
                       "document": document_to_dict(item.as_icsr())}
            else:
                obj = {"label": label, "document": document_to_dict(item)}
            fh.write(json.dumps(obj, ensure_ascii=False) + "\n")
    print(f"wrote {len(corpus)} documents to {args.out}", file=sys.stderr)
    return 0


def _read_corpus_line(line: str):
    obj = json.loads(line)
    if "document" in obj:
        return document_from_dict(obj["document"]), obj.get("label", "icsr")
    return document_from_dict(obj), "icsr"


def _cmd_build_cache(args) -> int:
    config = _load_effective_config(args)
    if _maybe_dump_config(args, config):
        return 0
    config.validate(check_paths=False)
    adapter, lexicon, _ = build_components(
        dataclasses.replace(config, cache_path=""))
    docs = []
    with open(args.corpus, encoding="utf-8") as fh:
        for line in fh:
            if not line.strip():
                continue
            doc, label = _read_corpus_line(line)
            if label == "icsr":
                docs.append(doc)
    cache = build_cache(docs, adapter, source_corpus_tag=Path(args.corpus).name)
    out = args.out or config.cache_path
    if not out:
        raise ConfigError("no output path: pass --out or set cache_path")
    cache.save(out)
    print(f"cached {len(cache)} embeddings (dimension {cache.dimension}) to {out}",
          file=sys.stderr)
    return 0


def _cmd_calibrate(args) -> int:
    config = _load_effective_config(args)
    if _maybe_dump_config(args, config):
        return 0
    config.validate()
    adapter, lexicon, cache = build_components(config)
    if cache is None:
        raise ConfigError("calibrate requires cache_path")
    from .icsr import serialize_body
    scores = []
    with open(args.corpus, encoding="utf-8") as fh:
        for line in fh:
            if not line.strip():
                continue
            doc, label = _read_corpus_line(line)
            if label != "icsr":
                continue
            pooled = pool_embedding(adapter.embed_source(serialize_body(doc)))
            scores.append(score_document(pooled, cache, k=config.k).distance)
    threshold = calibrate_threshold(scores, args.fpr)
    print(canonical_json({"threshold": threshold, "fpr": args.fpr, "n_scores": len(scores)}))
    return 0


def _cmd_run(args) -> int:
    config = _load_effective_config(args)
    if _maybe_dump_config(args, config):
        return 0
    config.validate()
    adapter, lexicon, cache = build_components(config)
    threshold = resolve_dluq_threshold(config, cache)

    with open(args.corpus, encoding="utf-8") as fh:
        lines = [line for line in fh if line.strip()]

    def process(indexed):
        index, line = indexed
        try:
            doc, _ = _read_corpus_line(line)
        except (PvGuardError, json.JSONDecodeError, ValueError) as exc:
            report = GuardrailReport(
                case_id=f"line-{index + 1}",
                pipeline_version=__version__,
                routing=REVIEW,
                routing_reasons=("stage_error:parse",),
                stage_errors=(("parse", f"{type(exc).__name__}: {exc}"),),
            )
            return report
        return run_case(doc, config, adapter, lexicon, cache,
                        dluq_threshold=threshold).report

    jobs = args.jobs or os.cpu_count() or 1
    if jobs > 1:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            reports = list(pool.map(process, enumerate(lines)))
    else:
        reports = [process(item) for item in enumerate(lines)]

    out_path = args.out or str(Path(config.output_dir) / "reports.jsonl")
    Path(out_path).parent.mkdir(parents=True, exist_ok=True)
    stage_failures = 0
    with open(out_path, "w", encoding="utf-8") as fh:
        for report in reports:
            if report.stage_errors:
                stage_failures += 1
            if args.include_timing:
                fh.write(canonical_json(report.to_dict(include_timing=True)) + "\n")
            else:
                fh.write(report_json(report) + "\n")
    routed = {"auto_pass": 0, "review": 0, "reject": 0}
    for report in reports:
        routed[report.routing] += 1
    print(f"processed {len(reports)} cases -> {out_path} "
          f"(auto_pass={routed['auto_pass']} review={routed['review']} "
          f"reject={routed['reject']})", file=sys.stderr)
    return 2 if stage_failures else 0


def _cmd_assess(args) -> int:
    options = AssessmentOptions(
        profile=args.profile,
        seed=args.seed if args.seed is not None else 1,
        trials=args.trials,
        lexicon_path=args.lexicon,
    )
    summary = run_assessment_suite(options, output_dir=args.out)
    print(canonical_json(summary.to_dict()))
    return 0


def _cmd_eval(args) -> int:
    rows = []
    bleu_scores, wers, aurocs = [], [], []
    with open(args.input, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            obj = json.loads(line)
            if "hypothesis" in obj and "references" in obj:
                hyp = tokenize_for_bleu(obj["hypothesis"], args.tokenizer)
                refs = [tokenize_for_bleu(r, args.tokenizer) for r in obj["references"]]
                result = bleu(hyp, refs, smooth=args.smooth, tokenizer_tag=args.tokenizer)
                wer = word_error_rate(hyp, refs[0]) if refs[0] else None
                rows.append({"line": lineno, "bleu": result.to_dict(), "wer": wer})
                bleu_scores.append(result.score)
                if wer is not None:
                    wers.append(wer)
            elif "scores" in obj and "labels" in obj:
                value = auroc(obj["scores"], obj["labels"])
                rows.append({"line": lineno, "auroc": value})
                aurocs.append(value)
            else:
                raise MalformedDocument(
                    f"line {lineno}: need hypothesis/references or scores/labels")
    summary: dict = {"rows": rows, "summary": {}}
    if bleu_scores:
        summary["summary"]["mean_bleu"] = sum(bleu_scores) / len(bleu_scores)
    if wers:
        summary["summary"]["mean_wer"] = sum(wers) / len(wers)
    if aurocs:
        summary["summary"]["mean_auroc"] = sum(aurocs) / len(aurocs)
    text = canonical_json(summary)
    if args.out:
        Path(args.out).write_text(text + "\n", encoding="utf-8")
    else:
        print(text)
    return 0


def _cmd_serve(args) -> int:
    config = _load_effective_config(args)
    if _maybe_dump_config(args, config):
        return 0
    config.validate()
    adapter, lexicon, cache = build_components(config)
    store_path = args.store or str(Path(config.output_dir) / "review.db")
    Path(store_path).parent.mkdir(parents=True, exist_ok=True)
    store = ReviewStore(store_path)
    app = create_app(config, adapter, lexicon, cache, store, token=args.token)
    import uvicorn
    uvicorn.run(app, host=args.host, port=args.port, log_level="warning")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="pvguard", description=__doc__)
    parser.add_argument("--version", action="version", version=f"pvguard {__version__}")
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, default=None,
                        help="override every configured seed for reproducible runs")
    common.add_argument("--format", choices=("text", "json"), default="text",
                        help="error output format")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=(
        lambda **kw: argparse.ArgumentParser(parents=[common], **kw)))

    p = sub.add_parser("ingest", help="parse documents and report validity")
    p.add_argument("files", nargs="+")
    p.add_argument("--doc-format", choices=("json", "xml_lite"), default="json")
    p.add_argument("--out", help="write normalized document JSONL here")
    p.set_defaults(func=_cmd_ingest)

    p = sub.add_parser("synth", help="generate a labeled synthetic corpus")
    p.add_argument("--n-icsr", type=int, default=80)
    p.add_argument("--n-extraneous", type=int, default=25)
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_synth)

    p = sub.add_parser("build-cache", help="embed a corpus into a binary cache")
    p.add_argument("--config", required=True)
    p.add_argument("corpus")
    p.add_argument("--out", help="cache path (defaults to config cache_path)")
    p.add_argument("--dump-config", action="store_true")
    p.set_defaults(func=_cmd_build_cache)

    p = sub.add_parser("calibrate", help="derive a distance threshold from in-distribution scores")
    p.add_argument("--config", required=True)
    p.add_argument("corpus")
    p.add_argument("--fpr", type=float, default=0.05)
    p.add_argument("--dump-config", action="store_true")
    p.set_defaults(func=_cmd_calibrate)

    p = sub.add_parser("run", help="run the guardrail pipeline over a corpus")
    p.add_argument("--config", required=True)
    p.add_argument("corpus")
    p.add_argument("--out", help="reports path (defaults to <output_dir>/reports.jsonl)")
    p.add_argument("--jobs", type=int, default=None, help="worker threads (default: CPUs)")
    p.add_argument("--include-timing", action="store_true",
                   help="include per-stage timings (non-canonical output)")
    p.add_argument("--dump-config", action="store_true")
    p.set_defaults(func=_cmd_run)

    p = sub.add_parser("assess", help="run the guardrail assessment suite")
    p.add_argument("--profile", choices=("separable", "noisy"), default="separable")
    p.add_argument("--trials", type=int, default=1000)
    p.add_argument("--lexicon", default=None)
    p.add_argument("--out", help="directory for summary.json and CSVs")
    p.set_defaults(func=_cmd_assess)

    p = sub.add_parser("eval", help="compute metrics over a JSONL file")
    p.add_argument("input")
    p.add_argument("--tokenizer", choices=("plain", "intl"), default="plain")
    p.add_argument("--smooth", action="store_true")
    p.add_argument("--out")
    p.set_defaults(func=_cmd_eval)

    p = sub.add_parser("serve", help="serve the HTTP API")
    p.add_argument("--config", required=True)
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--port", type=int, default=8080)
    p.add_argument("--token", default="", help="bearer token guarding mutating endpoints")
    p.add_argument("--store", help="review store path (defaults to <output_dir>/review.db)")
    p.add_argument("--dump-config", action="store_true")
    p.set_defaults(func=_cmd_serve)

    return parser


def main(argv: Optional[list[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except _VALIDATION_ERRORS as exc:
        return _fail(args, exc, 1)
    except (AdapterUnavailable, ProtocolError, OSError, PvGuardError) as exc:
        return _fail(args, exc, 2)


def entry() -> None:
    sys.exit(main())


if __name__ == "__main__":
    sys.exit(main())
