"""HTTP API over the pipeline and review store.

JSON endpoints under /api; errors use the envelope {"error": {code, message}}.
Mutating endpoints require the configured bearer token. Ingestion is
idempotent on case_id: re-posting a stored case returns its existing report.
"""

from __future__ import annotations

import hashlib
from typing import Optional

from fastapi import FastAPI, Request
from fastapi.responses import HTMLResponse, JSONResponse

from .config import PipelineConfig
from .dluq import EmbeddingCache
from .errors import (
    CaseClosed,
    DuplicateReviewer,
    MalformedDocument,
    MissingRequiredField,
    PreconditionViolation,
    PvGuardError,
    UnknownCase,
    UnsupportedFormat,
)
from .icsr import document_from_dict
from .lexicon import Lexicon
from .pipeline import render_annotated_html, resolve_dluq_threshold, run_case
from .review import (
    AdjudicationRecord,
    ReviewCase,
    ReviewStore,
    ReviewerAssessment,
)

_ERROR_CODES = {
    UnknownCase: ("unknown_case", 404),
    DuplicateReviewer: ("duplicate_reviewer", 409),
    CaseClosed: ("case_closed", 409),
    MalformedDocument: ("invalid_document", 422),
    MissingRequiredField: ("invalid_document", 422),
    UnsupportedFormat: ("invalid_document", 422),
    PreconditionViolation: ("invalid_request", 422),
}


def _error_response(code: str, message: str, status: int) -> JSONResponse:
    return JSONResponse(status_code=status,
                        content={"error": {"code": code, "message": message}})


def _queue_order_key(case_id: str) -> str:
    # stable pseudo-random assignment order, server-decided
    return hashlib.sha256(case_id.encode("utf-8")).hexdigest()


def create_app(
    config: PipelineConfig,
    adapter,
    lexicon: Lexicon,
    cache: Optional[EmbeddingCache],
    store: ReviewStore,
    token: str = "",
) -> FastAPI:
    app = FastAPI(title="pvguard", version="1")
    threshold = resolve_dluq_threshold(config, cache)

    def require_token(request: Request) -> Optional[JSONResponse]:
        if not token:
            return None
        supplied = request.headers.get("authorization", "")
        if supplied != f"Bearer {token}":
            return _error_response("unauthorized", "missing or invalid bearer token", 401)
        return None

    @app.exception_handler(PvGuardError)
    async def handle_domain_error(request: Request, exc: PvGuardError):
        code, status = _ERROR_CODES.get(type(exc), ("internal_error", 500))
        return _error_response(code, str(exc), status)

    @app.post("/api/cases")
    async def ingest_case(request: Request):
        denied = require_token(request)
        if denied:
            return denied
        try:
            payload = await request.json()
        except Exception:
            return _error_response("invalid_document", "request body is not JSON", 422)
        doc = document_from_dict(payload)
        if store.has_case(doc.case_id):
            existing = store.get_case(doc.case_id)
            return JSONResponse(content=existing.report.to_dict())
        result = run_case(doc, config, adapter, lexicon, cache, dluq_threshold=threshold)
        store.put_case(ReviewCase(
            case_id=doc.case_id,
            source_text=result.source_text,
            target_text=result.target_text,
            report=result.report,
        ))
        return JSONResponse(content=result.report.to_dict())

    @app.get("/api/cases/{case_id}")
    async def get_case(case_id: str):
        return JSONResponse(content=store.get_case(case_id).to_dict())

    @app.get("/api/queue")
    async def queue(status: Optional[str] = None):
        cases = sorted(store.list_cases(status),
                       key=lambda c: _queue_order_key(c.case_id))
        return JSONResponse(content={"cases": [
            {
                "case_id": c.case_id,
                "status": c.status,
                "routing": c.report.routing,
                "routing_reasons": list(c.report.routing_reasons),
                "assessments": len(c.assessments),
                "needs_adjudication": c.status == "disagreement",
            }
            for c in cases
        ]})

    @app.post("/api/cases/{case_id}/assessments")
    async def submit_assessment(case_id: str, request: Request):
        denied = require_token(request)
        if denied:
            return denied
        try:
            payload = await request.json()
        except Exception:
            return _error_response("invalid_request", "request body is not JSON", 422)
        try:
            assessment = ReviewerAssessment(
                reviewer_id=payload.get("reviewer_id", ""),
                likert=tuple(payload.get("likert", {}).items()),
                binary_flags=tuple(payload.get("binary_flags", {}).items()),
                free_text=payload.get("free_text"),
                submitted_at=payload.get("submitted_at", ""),
            )
        except (AttributeError, TypeError) as exc:
            return _error_response("invalid_request", f"malformed assessment: {exc}", 422)
        updated = store.submit_assessment(case_id, assessment)
        return JSONResponse(content=updated.to_dict())

    @app.post("/api/cases/{case_id}/adjudication")
    async def submit_adjudication(case_id: str, request: Request):
        denied = require_token(request)
        if denied:
            return denied
        try:
            payload = await request.json()
        except Exception:
            return _error_response("invalid_request", "request body is not JSON", 422)
        try:
            record = AdjudicationRecord(
                adjudicator_id=payload.get("adjudicator_id", ""),
                assessment=ReviewerAssessment.from_dict(payload["assessment"]),
                clinically_acceptable=bool(payload["clinically_acceptable"]),
                submitted_at=payload.get("submitted_at", ""),
            )
        except (KeyError, AttributeError, TypeError) as exc:
            return _error_response("invalid_request", f"malformed adjudication: {exc}", 422)
        if not record.adjudicator_id:
            return _error_response("invalid_request", "adjudicator_id is required", 422)
        updated = store.submit_adjudication(case_id, record)
        return JSONResponse(content=updated.to_dict())

    @app.get("/api/cases/{case_id}/annotated")
    async def annotated(case_id: str):
        case = store.get_case(case_id)
        html_text = render_annotated_html(case.report, case.source_text, case.target_text)
        return HTMLResponse(content=html_text)

    return app
