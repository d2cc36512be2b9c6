import json
from pathlib import Path

import pytest

from pvguard.cli import main
from pvguard.icsr import serialize_xml_lite

from conftest import build_doc

CONFIG_TEMPLATE = """
lexicon_path = ""
cache_path = "{cache_path}"
k = 1
dluq_threshold = {threshold}
output_dir = "{output_dir}"

[adapter]
type = "mock"
profile = "separable"

[seeds]
adapter = 4
corpus = 31
"""


@pytest.fixture
def workdir(tmp_path):
    return tmp_path


def write_config(workdir, cache_path="", threshold='"calibrated:0.05"'):
    path = workdir / "config.toml"
    path.write_text(CONFIG_TEMPLATE.format(
        cache_path=cache_path, threshold=threshold,
        output_dir=str(workdir / "out")), encoding="utf-8")
    return str(path)


def synth_corpus(workdir, n_icsr=12, n_extraneous=4, seed=31):
    corpus = workdir / "corpus.jsonl"
    code = main(["synth", "--n-icsr", str(n_icsr), "--n-extraneous", str(n_extraneous),
                 "--seed", str(seed), "--out", str(corpus)])
    assert code == 0
    return corpus


class TestSynthAndIngest:
    def test_synth_counts(self, workdir):
        corpus = synth_corpus(workdir, 5, 3)
        lines = [json.loads(l) for l in corpus.read_text().splitlines()]
        assert len(lines) == 8
        assert sum(1 for l in lines if l["label"] == "icsr") == 5

    def test_ingest_json(self, workdir, capsys):
        doc_path = workdir / "doc.json"
        from pvguard.icsr import document_to_dict, serialize_json
        doc_path.write_bytes(serialize_json(build_doc()))
        out_path = workdir / "normalized.jsonl"
        code = main(["ingest", str(doc_path), "--out", str(out_path)])
        assert code == 0
        verdict = json.loads(capsys.readouterr().out.strip())
        assert verdict == {"case_id": "case-1", "valid": True, "missing_elements": []}
        assert json.loads(out_path.read_text())["case_id"] == "case-1"

    def test_ingest_xml_lite(self, workdir, capsys):
        doc_path = workdir / "doc.xml"
        doc_path.write_bytes(serialize_xml_lite(build_doc()))
        code = main(["ingest", str(doc_path), "--doc-format", "xml_lite"])
        assert code == 0
        assert json.loads(capsys.readouterr().out.strip())["valid"] is True

    def test_ingest_invalid_doc_exits_one(self, workdir, capsys):
        doc_path = workdir / "bad.json"
        doc_path.write_text("{broken", encoding="utf-8")
        assert main(["ingest", str(doc_path)]) == 1


class TestBuildCacheAndCalibrate:
    def test_build_then_calibrate(self, workdir, capsys):
        corpus = synth_corpus(workdir)
        cache_path = workdir / "cache.bin"
        config = write_config(workdir)
        code = main(["build-cache", "--config", config, str(corpus),
                     "--out", str(cache_path)])
        assert code == 0
        assert cache_path.exists()
        capsys.readouterr()

        config2 = write_config(workdir, cache_path=str(cache_path))
        code = main(["calibrate", "--config", config2, str(corpus), "--fpr", "0.1"])
        assert code == 0
        result = json.loads(capsys.readouterr().out.strip())
        assert result["n_scores"] == 12
        assert result["threshold"] >= 0.0


class TestRun:
    def test_run_and_determinism(self, workdir):
        corpus = synth_corpus(workdir)
        cache_path = workdir / "cache.bin"
        config = write_config(workdir)
        main(["build-cache", "--config", config, str(corpus), "--out", str(cache_path)])
        config = write_config(workdir, cache_path=str(cache_path))
        out_a = workdir / "a.jsonl"
        out_b = workdir / "b.jsonl"
        assert main(["run", "--config", config, str(corpus), "--out", str(out_a)]) == 0
        assert main(["run", "--config", config, str(corpus), "--out", str(out_b),
                     "--jobs", "4"]) == 0
        assert out_a.read_bytes() == out_b.read_bytes()
        reports = [json.loads(l) for l in out_a.read_text().splitlines()]
        assert len(reports) == 16
        routings = {r["routing"] for r in reports}
        assert "reject" in routings  # extraneous docs gated out
        rejected = [r for r in reports if r["routing"] == "reject"]
        assert all(r["mismatch"] is None for r in rejected)

    def test_missing_lexicon_path_exits_one(self, workdir, capsys):
        corpus = synth_corpus(workdir)
        config_path = workdir / "config.toml"
        config_path.write_text(
            'lexicon_path = "/nonexistent/lexicon.tsv"\n[adapter]\ntype = "mock"\n',
            encoding="utf-8")
        code = main(["run", "--config", str(config_path), str(corpus)])
        assert code == 1
        assert "/nonexistent/lexicon.tsv" in capsys.readouterr().err

    def test_json_error_format(self, workdir, capsys):
        corpus = synth_corpus(workdir)
        config_path = workdir / "config.toml"
        config_path.write_text(
            'lexicon_path = "/nonexistent/lexicon.tsv"\n[adapter]\ntype = "mock"\n',
            encoding="utf-8")
        code = main(["run", "--format", "json", "--config", str(config_path), str(corpus)])
        assert code == 1
        err = json.loads(capsys.readouterr().err.strip().splitlines()[-1])
        assert err["error"]["code"] == "ConfigError"

    def test_malformed_line_still_produces_report(self, workdir):
        corpus = synth_corpus(workdir, 2, 0)
        with open(corpus, "a", encoding="utf-8") as fh:
            fh.write("{this is not json}\n")
        config = write_config(workdir, threshold="99.0")
        out = workdir / "r.jsonl"
        code = main(["run", "--config", config, str(corpus), "--out", str(out)])
        assert code == 2  # stage failure surfaced in the exit code
        reports = [json.loads(l) for l in out.read_text().splitlines()]
        assert len(reports) == 3
        assert reports[-1]["routing"] == "review"
        assert reports[-1]["routing_reasons"] == ["stage_error:parse"]

    def test_include_timing_adds_diagnostics(self, workdir):
        corpus = synth_corpus(workdir, 2, 0)
        config = write_config(workdir, threshold="99.0")
        out = workdir / "timed.jsonl"
        assert main(["run", "--config", config, str(corpus), "--out", str(out),
                     "--include-timing"]) == 0
        reports = [json.loads(l) for l in out.read_text().splitlines()]
        assert all("timing" in r and r["timing"] for r in reports)

    def test_dump_config_round_trip(self, workdir, capsys):
        config = write_config(workdir)
        corpus = synth_corpus(workdir, 1, 0)
        assert main(["run", "--config", config, str(corpus), "--dump-config"]) == 0
        dumped = capsys.readouterr().out
        dumped_path = workdir / "dumped.toml"
        dumped_path.write_text(dumped, encoding="utf-8")
        from pvguard.config import load_config
        assert load_config(dumped_path, env={}) == load_config(config, env={})


class TestAssessCli:
    def test_separable_profile_summary(self, workdir, capsys):
        out_dir = workdir / "assessment"
        code = main(["assess", "--profile", "separable", "--seed", "1",
                     "--trials", "30", "--out", str(out_dir)])
        assert code == 0
        summary = json.loads(capsys.readouterr().out.strip())
        assert summary["dluq"]["auroc"] == 1.0
        assert summary["mismatch"]["never_event_catch_rate"] == 1.0
        for name in ("summary.json", "dluq_scores.csv", "missrates.csv",
                     "catch_rates.csv", "strata_entropy.csv"):
            assert (out_dir / name).exists()


class TestEvalCli:
    def test_translation_metrics(self, workdir, capsys):
        data = workdir / "eval.jsonl"
        rows = [
            {"hypothesis": "the cat sat", "references": ["the cat sat"]},
            {"hypothesis": "a dog", "references": ["the cat sat"]},
        ]
        data.write_text("\n".join(json.dumps(r) for r in rows), encoding="utf-8")
        assert main(["eval", str(data)]) == 0
        result = json.loads(capsys.readouterr().out.strip())
        assert result["rows"][0]["bleu"]["score"] == 1.0
        assert result["rows"][0]["wer"] == 0.0
        assert result["summary"]["mean_bleu"] == 0.5

    def test_scores_labels_mode(self, workdir, capsys):
        data = workdir / "scores.jsonl"
        data.write_text(json.dumps(
            {"scores": [0.9, 0.1], "labels": ["pos", "neg"]}), encoding="utf-8")
        assert main(["eval", str(data)]) == 0
        result = json.loads(capsys.readouterr().out.strip())
        assert result["rows"][0]["auroc"] == 1.0
