"""Case safety report data model, validity rules, and serialization.

The unit flowing through the pipeline is an :class:`IcsrDocument`: structured
fields plus narrative text plus a language tag. Documents are immutable after
construction and safe to share across workers.
"""

from __future__ import annotations

import json
import re
import xml.etree.ElementTree as ET
from dataclasses import dataclass, field
from typing import Optional

from .errors import MalformedDocument, MissingRequiredField, UnsupportedFormat

SCHEMA_VERSION = 1

SERIOUSNESS_LEVELS = frozenset({
    "death",
    "life_threatening",
    "hospitalization",
    "disability",
    "congenital_anomaly",
})

AGE_UNITS = frozenset({"years", "months", "days"})
SEX_VALUES = frozenset({"male", "female", "unknown"})

# Full or partial ISO-8601 calendar dates: YYYY, YYYY-MM, YYYY-MM-DD.
_DATE_RE = re.compile(r"^\d{4}(-\d{2}(-\d{2})?)?$")


@dataclass(frozen=True)
class ReporterInfo:
    """Who reported the case. At least one field must be present."""

    name: Optional[str] = None
    organization: Optional[str] = None
    country: Optional[str] = None

    def __post_init__(self):
        if self.name is None and self.organization is None and self.country is None:
            raise ValueError("ReporterInfo requires at least one field")

    def identifiable(self) -> bool:
        return True  # construction guarantees at least one field


@dataclass(frozen=True)
class PatientInfo:
    """Patient demographics. An age requires a unit."""

    age: Optional[float] = None
    age_unit: Optional[str] = None
    sex: Optional[str] = None

    def __post_init__(self):
        if self.age is not None:
            if not (self.age >= 0 and self.age == self.age and self.age != float("inf")):
                raise ValueError(f"age must be finite and >= 0, got {self.age!r}")
            if self.age_unit not in AGE_UNITS:
                raise ValueError(f"age_unit must be one of {sorted(AGE_UNITS)}")
        if self.sex is not None and self.sex not in SEX_VALUES:
            raise ValueError(f"sex must be one of {sorted(SEX_VALUES)}")

    def identifiable(self) -> bool:
        return self.age is not None or self.sex is not None


@dataclass(frozen=True)
class DateEntry:
    """A dated event. Partial dates (year or year-month) are kept, not rejected."""

    role: str
    value: str

    @property
    def valid(self) -> bool:
        return bool(_DATE_RE.match(self.value))

    @property
    def partial(self) -> bool:
        return self.valid and len(self.value) < 10


@dataclass(frozen=True)
class IcsrDocument:
    case_id: str
    language: str
    narrative: str = ""
    structured_fields: tuple[tuple[str, str], ...] = ()
    reporter: Optional[ReporterInfo] = None
    patient: Optional[PatientInfo] = None
    reactions: tuple[str, ...] = ()
    suspect_products: tuple[str, ...] = ()
    seriousness: frozenset[str] = frozenset()
    dates: tuple[DateEntry, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "structured_fields",
                           tuple((str(n), str(v)) for n, v in self.structured_fields))
        object.__setattr__(self, "reactions", tuple(self.reactions))
        object.__setattr__(self, "suspect_products", tuple(self.suspect_products))
        object.__setattr__(self, "seriousness", frozenset(self.seriousness))
        object.__setattr__(self, "dates", tuple(self.dates))
        if not self.case_id:
            raise MissingRequiredField("case_id is required")
        if not self.language:
            raise MissingRequiredField("language is required")
        if not self.narrative and not self.structured_fields:
            raise ValueError("narrative may be empty only if structured_fields is non-empty")
        bad = self.seriousness - SERIOUSNESS_LEVELS
        if bad:
            raise ValueError(f"unknown seriousness levels: {sorted(bad)}")


@dataclass(frozen=True)
class ValidityVerdict:
    """Which of the four essential elements are missing."""

    valid: bool
    missing_elements: frozenset[str]

    def __post_init__(self):
        object.__setattr__(self, "missing_elements", frozenset(self.missing_elements))
        if self.valid != (not self.missing_elements):
            raise ValueError("valid must be equivalent to missing_elements being empty")


def check_validity(doc: IcsrDocument) -> ValidityVerdict:
    """Check the four essential elements of a valid case report.

    A patient is identifiable iff age or sex is present; a reporter is
    identifiable iff any reporter field is present. Total and deterministic.
    """
    missing = set()
    if doc.reporter is None or not doc.reporter.identifiable():
        missing.add("reporter")
    if doc.patient is None or not doc.patient.identifiable():
        missing.add("patient")
    if not doc.reactions:
        missing.add("reaction")
    if not doc.suspect_products:
        missing.add("suspect_product")
    return ValidityVerdict(valid=not missing, missing_elements=frozenset(missing))


# --- model-facing text form ---------------------------------------------------
#
# The field block is rendered as "name_1: value_1; name_2: value_2". Every ";"
# and ":" inside a name or value is doubled so a lone ";" / ":" can only be a
# delimiter, keeping the rendering parseable (and injective).

def _escape(text: str) -> str:
    return text.replace(";", ";;").replace(":", "::")


def _unescape(text: str) -> str:
    return text.replace(";;", ";").replace("::", ":")


def _split_delimited(block: str, delim: str) -> list[str]:
    """Split on single-`delim` + space boundaries, honoring doubled escapes."""
    parts = []
    start = 0
    i = 0
    n = len(block)
    while i < n:
        if block[i] == delim:
            run = 1
            while i + run < n and block[i + run] == delim:
                run += 1
            after = i + run
            if run % 2 == 1 and after < n and block[after] == " ":
                # the final delimiter of an odd run is a separator
                parts.append(block[start:i + run - 1])
                start = after + 1
            i = after
        else:
            i += 1
    parts.append(block[start:])
    return parts


def serialize_body(doc: IcsrDocument) -> str:
    """Field block + newline + narrative, without any task instruction."""
    pairs = "; ".join(
        f"{_escape(name)}: {_escape(value)}" for name, value in doc.structured_fields
    )
    return f"{pairs}\n{doc.narrative}"


def serialize_for_model(doc: IcsrDocument, instruction: str) -> str:
    """Instruction-prefixed text form fed to the translation model.

    Layout: instruction, newline, "name: value; name: value" field block in
    structured_fields order, newline, narrative.
    """
    if not instruction:
        raise ValueError("instruction must be non-empty")
    return f"{instruction}\n{serialize_body(doc)}"


def parse_body(body: str) -> tuple[tuple[tuple[str, str], ...], str]:
    """Inverse of :func:`serialize_body`: (structured_fields, narrative)."""
    if "\n" in body:
        block, narrative = body.split("\n", 1)
    else:
        block, narrative = body, ""
    fields = []
    if block:
        for pair in _split_delimited(block, ";"):
            halves = _split_delimited(pair, ":")
            if len(halves) < 2:
                raise MalformedDocument(f"field pair without ': ' delimiter: {pair!r}")
            name = halves[0]
            value = ": ".join(halves[1:])  # only the first ": " separates name/value
            fields.append((_unescape(name), _unescape(value)))
    return tuple(fields), narrative


def parse_model_input(text: str) -> tuple[str, tuple[tuple[str, str], ...], str]:
    """Inverse of :func:`serialize_for_model`: (instruction, fields, narrative)."""
    if "\n" not in text:
        raise MalformedDocument("model input must contain an instruction line")
    instruction, body = text.split("\n", 1)
    fields, narrative = parse_body(body)
    return instruction, fields, narrative


# --- document file formats ----------------------------------------------------

def _reporter_to_dict(r: ReporterInfo) -> dict:
    return {"name": r.name, "organization": r.organization, "country": r.country}


def _patient_to_dict(p: PatientInfo) -> dict:
    return {"age": p.age, "age_unit": p.age_unit, "sex": p.sex}


def document_to_dict(doc: IcsrDocument) -> dict:
    return {
        "schema_version": SCHEMA_VERSION,
        "case_id": doc.case_id,
        "language": doc.language,
        "narrative": doc.narrative,
        "structured_fields": [[n, v] for n, v in doc.structured_fields],
        "reporter": _reporter_to_dict(doc.reporter) if doc.reporter else None,
        "patient": _patient_to_dict(doc.patient) if doc.patient else None,
        "reactions": list(doc.reactions),
        "suspect_products": list(doc.suspect_products),
        "seriousness": sorted(doc.seriousness),
        "dates": [[d.role, d.value] for d in doc.dates],
    }


def serialize_json(doc: IcsrDocument) -> bytes:
    return json.dumps(document_to_dict(doc), ensure_ascii=False).encode("utf-8")


def _require_str(obj: dict, key: str) -> str:
    value = obj.get(key)
    if value is None or value == "":
        raise MissingRequiredField(f"document is missing {key!r}")
    if not isinstance(value, str):
        raise MalformedDocument(f"{key!r} must be a string")
    return value


def document_from_dict(obj: dict) -> IcsrDocument:
    if not isinstance(obj, dict):
        raise MalformedDocument("document must be a JSON object")
    version = obj.get("schema_version", SCHEMA_VERSION)
    if version != SCHEMA_VERSION:
        raise UnsupportedFormat(f"unsupported document schema_version {version!r}")
    case_id = _require_str(obj, "case_id")
    language = _require_str(obj, "language")
    try:
        reporter = obj.get("reporter")
        patient = obj.get("patient")
        doc = IcsrDocument(
            case_id=case_id,
            language=language,
            narrative=obj.get("narrative", "") or "",
            structured_fields=tuple(
                (pair[0], pair[1]) for pair in obj.get("structured_fields", ())
            ),
            reporter=ReporterInfo(**reporter) if reporter else None,
            patient=PatientInfo(**patient) if patient else None,
            reactions=tuple(obj.get("reactions", ())),
            suspect_products=tuple(obj.get("suspect_products", ())),
            seriousness=frozenset(obj.get("seriousness", ())),
            dates=tuple(DateEntry(role, value) for role, value in obj.get("dates", ())),
        )
    except MissingRequiredField:
        raise
    except (TypeError, ValueError, IndexError, KeyError) as exc:
        raise MalformedDocument(f"invalid document structure: {exc}") from exc
    return doc


def _parse_xml_lite(data: bytes) -> IcsrDocument:
    try:
        root = ET.fromstring(data.decode("utf-8"))
    except ET.ParseError as exc:
        raise MalformedDocument(f"invalid XML: {exc}") from exc
    if root.tag != "icsr":
        raise MalformedDocument(f"expected <icsr> root, got <{root.tag}>")

    def text_of(tag: str) -> Optional[str]:
        el = root.find(tag)
        return None if el is None else (el.text or "")

    reporter = None
    rep_el = root.find("reporter")
    if rep_el is not None:
        reporter = ReporterInfo(
            name=rep_el.get("name"),
            organization=rep_el.get("organization"),
            country=rep_el.get("country"),
        )
    patient = None
    pat_el = root.find("patient")
    if pat_el is not None:
        age = pat_el.get("age")
        patient = PatientInfo(
            age=float(age) if age is not None else None,
            age_unit=pat_el.get("age_unit"),
            sex=pat_el.get("sex"),
        )
    case_id = text_of("case_id")
    language = text_of("language")
    if not case_id:
        raise MissingRequiredField("document is missing 'case_id'")
    if not language:
        raise MissingRequiredField("document is missing 'language'")
    try:
        return IcsrDocument(
            case_id=case_id,
            language=language,
            narrative=text_of("narrative") or "",
            structured_fields=tuple(
                (el.get("name", ""), el.text or "") for el in root.findall("field")
            ),
            reporter=reporter,
            patient=patient,
            reactions=tuple(el.text or "" for el in root.findall("reaction")),
            suspect_products=tuple(el.text or "" for el in root.findall("suspect_product")),
            seriousness=frozenset(el.text or "" for el in root.findall("seriousness")),
            dates=tuple(
                DateEntry(el.get("role", ""), el.text or "") for el in root.findall("date")
            ),
        )
    except (TypeError, ValueError) as exc:
        raise MalformedDocument(f"invalid document structure: {exc}") from exc


def serialize_xml_lite(doc: IcsrDocument) -> bytes:
    root = ET.Element("icsr")
    ET.SubElement(root, "case_id").text = doc.case_id
    ET.SubElement(root, "language").text = doc.language
    ET.SubElement(root, "narrative").text = doc.narrative
    for name, value in doc.structured_fields:
        el = ET.SubElement(root, "field", name=name)
        el.text = value
    if doc.reporter:
        attrs = {k: v for k, v in _reporter_to_dict(doc.reporter).items() if v is not None}
        ET.SubElement(root, "reporter", attrs)
    if doc.patient:
        attrs = {
            k: (format(v, "g") if isinstance(v, float) else v)
            for k, v in _patient_to_dict(doc.patient).items()
            if v is not None
        }
        ET.SubElement(root, "patient", attrs)
    for reaction in doc.reactions:
        ET.SubElement(root, "reaction").text = reaction
    for product in doc.suspect_products:
        ET.SubElement(root, "suspect_product").text = product
    for level in sorted(doc.seriousness):
        ET.SubElement(root, "seriousness").text = level
    for entry in doc.dates:
        ET.SubElement(root, "date", role=entry.role).text = entry.value
    return ET.tostring(root, encoding="utf-8")


def parse_document(data: bytes, format: str = "json") -> IcsrDocument:
    """Parse a document from bytes in the named format ("json" or "xml_lite")."""
    if format == "json":
        try:
            obj = json.loads(data.decode("utf-8"))
        except (UnicodeDecodeError, json.JSONDecodeError) as exc:
            raise MalformedDocument(f"invalid JSON: {exc}") from exc
        return document_from_dict(obj)
    if format == "xml_lite":
        return _parse_xml_lite(data)
    raise UnsupportedFormat(f"unsupported document format {format!r}")
