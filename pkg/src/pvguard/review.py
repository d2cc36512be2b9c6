"""Review queue: dual reviewer assessments, disagreement, adjudication.

Persistence is an embedded sqlite store in WAL mode, keyed by case_id; one
process-wide writer lock gives the per-case single-writer guarantee.
"""

from __future__ import annotations

import json
import sqlite3
import threading
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Iterable, Optional, Union

from .errors import (
    CaseClosed,
    DuplicateReviewer,
    InsufficientData,
    PreconditionViolation,
    UnknownCase,
)
from .metrics import RaterTable, weighted_kappa
from .pipeline import GuardrailReport, report_from_dict

# Five-point rubric questions, each answered 1 (least favorable) to 5.
LIKERT_QUESTIONS = (
    "original_clear",
    "llm_clear",
    "llm_complete",
    "llm_correct",
    "extraneous_info",
    "ungrounded_key_info",
)

# Binary error categories; True marks the error as present at least once.
BINARY_CATEGORIES = (
    "source_contradictions",
    "llm_contradictions",
    "wrong_drug",
    "wrong_dosage",
    "wrong_dates",
    "incorrect_missing_ae",
    "rechallenge_dechallenge",
    "tto_issues",
    "nonsensical_phrases",
    "other_errors",
    "clinically_accurate",
)

PENDING = "pending"
IN_REVIEW = "in_review"
DISAGREEMENT = "disagreement"
ADJUDICATED = "adjudicated"
CLOSED = "closed"


@dataclass(frozen=True)
class ReviewerAssessment:
    reviewer_id: str
    likert: tuple[tuple[str, int], ...]
    binary_flags: tuple[tuple[str, bool], ...]
    free_text: Optional[str] = None
    submitted_at: str = ""

    def __post_init__(self):
        object.__setattr__(self, "likert", tuple(sorted(dict(self.likert).items())))
        flags = {key: False for key in BINARY_CATEGORIES}
        for key, value in dict(self.binary_flags).items():
            if key not in flags:
                raise PreconditionViolation(f"unknown binary category {key!r}")
            flags[key] = bool(value)
        object.__setattr__(self, "binary_flags", tuple(sorted(flags.items())))
        if not self.reviewer_id:
            raise PreconditionViolation("reviewer_id is required")
        answered = dict(self.likert)
        missing = [q for q in LIKERT_QUESTIONS if q not in answered]
        if missing:
            raise PreconditionViolation(f"unanswered Likert questions: {missing}")
        unknown = [q for q in answered if q not in LIKERT_QUESTIONS]
        if unknown:
            raise PreconditionViolation(f"unknown Likert questions: {unknown}")
        bad = {q: v for q, v in answered.items() if not (isinstance(v, int) and 1 <= v <= 5)}
        if bad:
            raise PreconditionViolation(f"Likert answers must be integers 1..5: {bad}")

    def rubric(self) -> tuple:
        """The comparable rubric content (free text excluded)."""
        return (self.likert, self.binary_flags)

    def to_dict(self) -> dict:
        return {
            "reviewer_id": self.reviewer_id,
            "likert": dict(self.likert),
            "binary_flags": dict(self.binary_flags),
            "free_text": self.free_text,
            "submitted_at": self.submitted_at,
        }

    @classmethod
    def from_dict(cls, obj: dict) -> "ReviewerAssessment":
        return cls(
            reviewer_id=obj["reviewer_id"],
            likert=tuple(obj["likert"].items()),
            binary_flags=tuple(obj["binary_flags"].items()),
            free_text=obj.get("free_text"),
            submitted_at=obj.get("submitted_at", ""),
        )


@dataclass(frozen=True)
class AdjudicationRecord:
    """Senior-expert resolution: the reviewer rubric plus the final
    clinically-acceptable-for-reporting verdict."""

    adjudicator_id: str
    assessment: ReviewerAssessment
    clinically_acceptable: bool
    submitted_at: str = ""

    def to_dict(self) -> dict:
        return {
            "adjudicator_id": self.adjudicator_id,
            "assessment": self.assessment.to_dict(),
            "clinically_acceptable": self.clinically_acceptable,
            "submitted_at": self.submitted_at,
        }

    @classmethod
    def from_dict(cls, obj: dict) -> "AdjudicationRecord":
        return cls(
            adjudicator_id=obj["adjudicator_id"],
            assessment=ReviewerAssessment.from_dict(obj["assessment"]),
            clinically_acceptable=obj["clinically_acceptable"],
            submitted_at=obj.get("submitted_at", ""),
        )


@dataclass(frozen=True)
class ReviewCase:
    case_id: str
    source_text: str
    target_text: str
    report: GuardrailReport
    assessments: tuple[ReviewerAssessment, ...] = ()
    adjudication: Optional[AdjudicationRecord] = None
    status: str = PENDING

    def to_dict(self) -> dict:
        return {
            "case_id": self.case_id,
            "source_text": self.source_text,
            "target_text": self.target_text,
            "report": self.report.to_dict(),
            "assessments": [a.to_dict() for a in self.assessments],
            "adjudication": self.adjudication.to_dict() if self.adjudication else None,
            "status": self.status,
        }

    @classmethod
    def from_dict(cls, obj: dict) -> "ReviewCase":
        return cls(
            case_id=obj["case_id"],
            source_text=obj["source_text"],
            target_text=obj["target_text"],
            report=report_from_dict(obj["report"]),
            assessments=tuple(ReviewerAssessment.from_dict(a) for a in obj["assessments"]),
            adjudication=(AdjudicationRecord.from_dict(obj["adjudication"])
                          if obj.get("adjudication") else None),
            status=obj["status"],
        )


class ReviewStore:
    """sqlite-backed case store (WAL journal, one writer lock)."""

    def __init__(self, path: Union[str, Path] = ":memory:"):
        self._conn = sqlite3.connect(str(path), check_same_thread=False)
        self._lock = threading.Lock()
        with self._lock:
            self._conn.execute("PRAGMA journal_mode=WAL")
            self._conn.execute(
                "CREATE TABLE IF NOT EXISTS cases ("
                "case_id TEXT PRIMARY KEY, status TEXT NOT NULL, payload TEXT NOT NULL)")
            self._conn.commit()

    def close(self) -> None:
        self._conn.close()

    def put_case(self, case: ReviewCase) -> None:
        payload = json.dumps(case.to_dict(), ensure_ascii=False)
        with self._lock:
            self._conn.execute(
                "INSERT OR REPLACE INTO cases (case_id, status, payload) VALUES (?, ?, ?)",
                (case.case_id, case.status, payload))
            self._conn.commit()

    def get_case(self, case_id: str) -> ReviewCase:
        row = self._conn.execute(
            "SELECT payload FROM cases WHERE case_id = ?", (case_id,)).fetchone()
        if row is None:
            raise UnknownCase(f"no case stored under {case_id!r}")
        return ReviewCase.from_dict(json.loads(row[0]))

    def has_case(self, case_id: str) -> bool:
        row = self._conn.execute(
            "SELECT 1 FROM cases WHERE case_id = ?", (case_id,)).fetchone()
        return row is not None

    def list_cases(self, status: Optional[str] = None) -> list[ReviewCase]:
        if status is None:
            rows = self._conn.execute("SELECT payload FROM cases").fetchall()
        else:
            rows = self._conn.execute(
                "SELECT payload FROM cases WHERE status = ?", (status,)).fetchall()
        return [ReviewCase.from_dict(json.loads(r[0])) for r in rows]

    def submit_assessment(self, case_id: str, assessment: ReviewerAssessment) -> ReviewCase:
        """Store a reviewer assessment and advance the case status.

        The second assessment either closes the case (full rubric agreement)
        or marks it a disagreement awaiting adjudication.
        """
        with self._lock:
            case = self._get_locked(case_id)
            if case.status in (CLOSED, ADJUDICATED):
                raise CaseClosed(f"case {case_id!r} no longer accepts assessments")
            if any(a.reviewer_id == assessment.reviewer_id for a in case.assessments):
                raise DuplicateReviewer(
                    f"reviewer {assessment.reviewer_id!r} already assessed {case_id!r}")
            if len(case.assessments) >= 2:
                raise CaseClosed(f"case {case_id!r} already has two assessments")
            assessments = case.assessments + (assessment,)
            if len(assessments) == 1:
                status = IN_REVIEW
            elif assessments[0].rubric() == assessments[1].rubric():
                status = CLOSED
            else:
                status = DISAGREEMENT
            updated = replace(case, assessments=assessments, status=status)
            self._put_locked(updated)
            return updated

    def submit_adjudication(self, case_id: str, record: AdjudicationRecord) -> ReviewCase:
        with self._lock:
            case = self._get_locked(case_id)
            if case.adjudication is not None:
                raise CaseClosed(f"case {case_id!r} is already adjudicated")
            if case.status != DISAGREEMENT:
                raise PreconditionViolation(
                    f"case {case_id!r} is {case.status}, not awaiting adjudication")
            updated = replace(case, adjudication=record, status=ADJUDICATED)
            self._put_locked(updated)
            return updated

    def _get_locked(self, case_id: str) -> ReviewCase:
        row = self._conn.execute(
            "SELECT payload FROM cases WHERE case_id = ?", (case_id,)).fetchone()
        if row is None:
            raise UnknownCase(f"no case stored under {case_id!r}")
        return ReviewCase.from_dict(json.loads(row[0]))

    def _put_locked(self, case: ReviewCase) -> None:
        self._conn.execute(
            "INSERT OR REPLACE INTO cases (case_id, status, payload) VALUES (?, ?, ?)",
            (case.case_id, case.status, json.dumps(case.to_dict(), ensure_ascii=False)))
        self._conn.commit()


def compute_agreement(cases: Iterable[ReviewCase], question: str) -> tuple[RaterTable, float]:
    """Contingency table and quadratic-weighted kappa for one rubric question
    across dual-reviewed cases."""
    if question in LIKERT_QUESTIONS:
        categories: tuple = (1, 2, 3, 4, 5)
        getter = lambda a: dict(a.likert)[question]
    elif question in BINARY_CATEGORIES:
        categories = (False, True)
        getter = lambda a: dict(a.binary_flags)[question]
    else:
        raise PreconditionViolation(f"unknown rubric question {question!r}")
    index = {c: i for i, c in enumerate(categories)}
    counts = [[0] * len(categories) for _ in categories]
    used = 0
    for case in cases:
        if len(case.assessments) < 2:
            continue
        first, second = case.assessments[0], case.assessments[1]
        counts[index[getter(first)]][index[getter(second)]] += 1
        used += 1
    if used == 0:
        raise InsufficientData("agreement needs at least one dual-reviewed case")
    table = RaterTable(categories=categories, counts=tuple(tuple(r) for r in counts))
    return table, weighted_kappa(table)
