"""Record API responses from the pipeline service into a JSON fixture.

The UI tests run against this recording, so they exercise exactly what the
HTTP API serves. Regenerate with:  python scripts/record_fixture.py
"""

import json
from pathlib import Path

from fastapi.testclient import TestClient

from pvguard.adapter import MockAdapter
from pvguard.config import AdapterSettings, PipelineConfig, Seeds
from pvguard.corpus import fixture_lexicon, synthesize_corpus
from pvguard.dluq import build_cache
from pvguard.icsr import document_to_dict, serialize_body
from pvguard.review import LIKERT_QUESTIONS, ReviewStore
from pvguard.service import create_app

TOKEN = "fixture-token"
AUTH = {"Authorization": f"Bearer {TOKEN}"}
OUT = Path(__file__).resolve().parent.parent / "fixtures" / "recorded_api.json"


def full_likert(value):
    return {q: value for q in LIKERT_QUESTIONS}


def main():
    lex = fixture_lexicon()
    docs = [d for d, _ in synthesize_corpus(3, 0, seed=31)]
    mismatch_doc, entropy_doc, disagreement_doc = docs

    # hand-crafted target so one case shows all four span classes at once:
    # matched drug (warfarin), hallucinated drug (metformin), matched AE
    # (headache), and an AE present only in the source (nausea)
    crafted = (
        "The patient took warfarin and also metformin. "
        "Later headache was reported by the physician."
    )
    mismatch_doc = type(mismatch_doc)(
        case_id=mismatch_doc.case_id,
        language="ja",
        narrative="患者はワルファリンを服用した。頭痛と悪心が発現した。",
        structured_fields=(("country_of_occurrence", "JP"),),
        reporter=mismatch_doc.reporter,
        patient=mismatch_doc.patient,
        reactions=("頭痛", "悪心"),
        suspect_products=("ワルファリン",),
        seriousness=frozenset(),
        dates=(),
    )
    table = {serialize_body(mismatch_doc): crafted}

    adapter = MockAdapter(lexicon=lex, profile="separable", seed=4,
                          translation_table=table)
    cache = build_cache([d for d, _ in synthesize_corpus(30, 0, seed=77)],
                        MockAdapter(lexicon=lex, profile="separable", seed=4))
    config = PipelineConfig(
        adapter=AdapterSettings(type="mock", profile="separable"),
        dluq_threshold=1.0,
        seeds=Seeds(adapter=4, corpus=31),
    )
    store = ReviewStore(":memory:")
    client = TestClient(create_app(config, adapter, lex, cache, store, token=TOKEN))

    for doc in (mismatch_doc, entropy_doc, disagreement_doc):
        response = client.post("/api/cases", json=document_to_dict(doc), headers=AUTH)
        response.raise_for_status()

    # drive the third case into disagreement through the API
    client.post(f"/api/cases/{disagreement_doc.case_id}/assessments", headers=AUTH,
                json={"reviewer_id": "r1", "likert": full_likert(4)}).raise_for_status()
    client.post(f"/api/cases/{disagreement_doc.case_id}/assessments", headers=AUTH,
                json={"reviewer_id": "r2", "likert": full_likert(2),
                      "binary_flags": {"wrong_drug": True}}).raise_for_status()

    case_ids = [mismatch_doc.case_id, entropy_doc.case_id, disagreement_doc.case_id]
    fixture = {
        "token": TOKEN,
        "mismatch_case_id": mismatch_doc.case_id,
        "entropy_case_id": entropy_doc.case_id,
        "disagreement_case_id": disagreement_doc.case_id,
        "queue": client.get("/api/queue").json(),
        "queue_pending": client.get("/api/queue", params={"status": "pending"}).json(),
        "cases": {cid: client.get(f"/api/cases/{cid}").json() for cid in case_ids},
        "annotated": {cid: client.get(f"/api/cases/{cid}/annotated").text
                      for cid in case_ids},
    }

    mismatch_report = fixture["cases"][mismatch_doc.case_id]["report"]
    labels = {(s["label"], s["kind"])
              for s in mismatch_report["mismatch"]["source_spans"]
              + mismatch_report["mismatch"]["target_spans"]}
    assert ("matched", "drug") in labels and ("unmatched", "drug") in labels
    assert ("matched", "adverse_event") in labels and ("unmatched", "adverse_event") in labels
    entropy_report = fixture["cases"][entropy_doc.case_id]["report"]
    levels = {s["level"] for s in entropy_report["tluq"]["flagged_spans"]}
    assert levels == {"L1", "L2", "L3"}, levels

    OUT.parent.mkdir(parents=True, exist_ok=True)
    OUT.write_text(json.dumps(fixture, ensure_ascii=False, indent=2), encoding="utf-8")
    print(f"recorded {len(case_ids)} cases -> {OUT}")


if __name__ == "__main__":
    main()
