"""Synthetic corpus generation and the rule-based reference translator.

Generated case reports are Japanese-ish template text over the fixture
lexicon; nothing here ships licensed vocabulary or real patient text. The
translator inverts the same templates, which is what makes a generated pair
"faithful" by construction: every drug/AE mention crosses via its
canonical_id.
"""

from __future__ import annotations

import random
import re
from dataclasses import dataclass
from importlib import resources
from typing import Optional, Union

from .icsr import DateEntry, IcsrDocument, PatientInfo, ReporterInfo, parse_body
from .lexicon import ADVERSE_EVENT, DRUG, Lexicon, load_lexicon_tsv

_FIXTURE_CACHE: dict[str, Lexicon] = {}


def fixture_lexicon() -> Lexicon:
    """The packaged synthetic lexicon (loaded once)."""
    if "lexicon" not in _FIXTURE_CACHE:
        with resources.as_file(resources.files("pvguard").joinpath("data/lexicon.tsv")) as p:
            _FIXTURE_CACHE["lexicon"] = load_lexicon_tsv(p)
    return _FIXTURE_CACHE["lexicon"]


# --- sentence templates -------------------------------------------------------
# Slots: {drug} {ae} {age} {sex} {date}. The ja side is what the generator
# writes; the en side is what the reference translator emits for it.

SENTENCE_TEMPLATES: tuple[tuple[str, str], ...] = (
    ("{age}歳の{sex}患者が{drug}を服用した。",
     "A {age}-year-old {sex} patient took {drug}."),
    ("患者は{drug}の投与を受けた。",
     "The patient received {drug}."),
    ("{date}に{ae}が発現した。",
     "On {date}, {ae} developed."),
    ("{ae}のため入院した。",
     "The patient was hospitalized due to {ae}."),
    ("報告者は{drug}と{ae}の因果関係を否定できないと述べた。",
     "The reporter stated that a causal relationship between {drug} and {ae} could not be ruled out."),
    ("{drug}の投与は中止された。",
     "Administration of {drug} was discontinued."),
    ("経過観察中である。",
     "The patient remains under observation."),
    ("症状は回復した。",
     "The symptoms resolved."),
)

_SEX_JA = {"male": "男性", "female": "女性"}
_SEX_EN = {"男性": "male", "女性": "female"}

_SLOT_PATTERNS = {
    "age": r"(?P<age>\d+)",
    "sex": r"(?P<sex>男性|女性)",
    "date": r"(?P<date>\d{4}-\d{2}-\d{2})",
    "drug": r"(?P<drug>.+?)",
    "ae": r"(?P<ae>.+?)",
}


def _template_regex(ja_template: str) -> re.Pattern:
    pattern = ""
    pos = 0
    for m in re.finditer(r"\{(\w+)\}", ja_template):
        pattern += re.escape(ja_template[pos:m.start()])
        pattern += _SLOT_PATTERNS[m.group(1)]
        pos = m.end()
    pattern += re.escape(ja_template[pos:])
    return re.compile(f"^{pattern}$")


_COMPILED_TEMPLATES = tuple(
    (_template_regex(ja), en) for ja, en in SENTENCE_TEMPLATES)

FIELD_SENTENCES = {
    "report_type": "Report type: {value}.",
    "country_of_occurrence": "The case was reported from {value}.",
    "seriousness": "The case was assessed as {value}.",
    "onset_date": "The onset date was {value}.",
    "receive_date": "The report was received on {value}.",
    "suspect_product": "Suspect product: {value}.",
    "reaction": "Reported reaction: {value}.",
}


def translate_terms(text: str, lex: Lexicon, language: str = "ja") -> str:
    """Replace every lexicon surface in `text` with its English surface."""
    matches = lex.find_terms(text, language)
    if not matches:
        return text
    data = text.encode("utf-8")
    out = []
    pos = 0
    for m in sorted(matches, key=lambda m: m.span):
        if m.span[0] < pos:
            continue  # overlapping cross-kind duplicate of the same span
        en = None
        for t, lang in lex.entry(m.canonical_id).surface_forms:
            if lang == "en":
                en = t
                break
        out.append(data[pos:m.span[0]].decode("utf-8"))
        out.append(en if en is not None else data[m.span[0]:m.span[1]].decode("utf-8"))
        pos = m.span[1]
    out.append(data[pos:].decode("utf-8"))
    return "".join(out)


def translate_sentence(sentence: str, lex: Lexicon) -> str:
    """Translate one ja template sentence; unknown shapes fall back to
    term-by-term substitution."""
    for pattern, en_template in _COMPILED_TEMPLATES:
        m = pattern.match(sentence)
        if m is None:
            continue
        slots = m.groupdict()
        if "sex" in slots and slots["sex"]:
            slots["sex"] = _SEX_EN.get(slots["sex"], slots["sex"])
        for key in ("drug", "ae"):
            if key in slots and slots[key]:
                slots[key] = translate_terms(slots[key], lex)
        return en_template.format(**slots)
    return translate_terms(sentence, lex)


def faithful_translation(body: str, lex: Optional[Lexicon] = None) -> str:
    """Reference English rendering of a serialized document body."""
    lex = lex or fixture_lexicon()
    fields, narrative = parse_body(body)
    sentences = []
    for name, value in fields:
        template = FIELD_SENTENCES.get(name, name + ": {value}.")
        sentences.append(template.format(value=translate_terms(value, lex)))
    for sentence in narrative.split("。"):
        if sentence.strip():
            sentences.append(translate_sentence(sentence + "。", lex))
    return " ".join(sentences)


# --- document synthesis -------------------------------------------------------

_ORGANIZATIONS = ("City General Hospital", "Regional Clinic", "University Hospital")
_SERIOUSNESS_POOL = ("hospitalization", "life_threatening", "disability")


@dataclass(frozen=True)
class ExtraneousDoc:
    """A non-ICSR submission used to exercise the anomaly gate."""

    doc_id: str
    text: str
    language: str
    category: str  # encyclopedic | fake_icsr | offdomain | other_language

    def as_icsr(self) -> IcsrDocument:
        """Wrap as a minimal parseable document, the shape garbage actually
        takes when submitted through the intake."""
        return IcsrDocument(case_id=self.doc_id, language=self.language,
                            narrative=self.text)


def _random_date(rng: random.Random) -> str:
    return f"20{rng.randint(10, 23):02d}-{rng.randint(1, 12):02d}-{rng.randint(1, 28):02d}"


def make_icsr(rng: random.Random, case_id: str, lex: Lexicon) -> IcsrDocument:
    drug_ids = sorted(lex.ids_of_kind(DRUG))
    ae_ids = sorted(lex.ids_of_kind(ADVERSE_EVENT))
    drugs = rng.sample(drug_ids, rng.randint(1, 2))
    aes = rng.sample(ae_ids, rng.randint(1, 2))
    drug_ja = [lex.surface_for(d, "ja") for d in drugs]
    ae_ja = [lex.surface_for(a, "ja") for a in aes]
    age = rng.randint(18, 90)
    sex = rng.choice(("male", "female"))
    onset = _random_date(rng)
    received = _random_date(rng)

    sentences = [
        SENTENCE_TEMPLATES[0][0].format(age=age, sex=_SEX_JA[sex], drug=drug_ja[0]),
        SENTENCE_TEMPLATES[2][0].format(date=onset, ae=ae_ja[0]),
    ]
    if len(ae_ja) > 1:
        sentences.append(SENTENCE_TEMPLATES[3][0].format(ae=ae_ja[1]))
    if len(drug_ja) > 1:
        sentences.append(SENTENCE_TEMPLATES[1][0].format(drug=drug_ja[1]))
    if rng.random() < 0.7:
        sentences.append(SENTENCE_TEMPLATES[4][0].format(drug=drug_ja[0], ae=ae_ja[0]))
    if rng.random() < 0.5:
        sentences.append(SENTENCE_TEMPLATES[5][0].format(drug=drug_ja[0]))
    sentences.append(rng.choice((SENTENCE_TEMPLATES[6][0], SENTENCE_TEMPLATES[7][0])))

    fields = [
        ("report_type", "spontaneous"),
        ("country_of_occurrence", "JP"),
        ("onset_date", onset),
        ("receive_date", received),
    ]
    seriousness = frozenset(rng.sample(_SERIOUSNESS_POOL, rng.randint(0, 2)))
    for level in sorted(seriousness):
        fields.append(("seriousness", level))
    for surface in drug_ja:
        fields.append(("suspect_product", surface))
    for surface in ae_ja:
        fields.append(("reaction", surface))

    return IcsrDocument(
        case_id=case_id,
        language="ja",
        narrative="".join(sentences),
        structured_fields=tuple(fields),
        reporter=ReporterInfo(organization=rng.choice(_ORGANIZATIONS), country="JP"),
        patient=PatientInfo(age=float(age), age_unit="years", sex=sex),
        reactions=tuple(ae_ja),
        suspect_products=tuple(drug_ja),
        seriousness=seriousness,
        dates=(DateEntry("receive", received), DateEntry("onset", onset)),
    )


# Extraneous text pools. Deliberately disjoint in content words from the
# case-report templates so the mock embedder has a real signal to find.
_WIKI_SENTENCES = (
    "江戸時代の城下町は五街道の宿場として栄えた。",
    "この山脈は火山活動によって形成され、最高峰は三千メートルを超える。",
    "当時の藩主は城の改修と堀の拡張を命じた。",
    "流域の平野では古くから稲作が行われてきた。",
    "明治期に鉄道が開通し、沿線の人口が急増した。",
)
_FAKE_DRUGS = ("ゾルピクラム", "フェナモリン", "ラキソベート", "ネオクラジン")
_FAKE_SYMPTOMS = ("全身のしびれ", "急なふらつき", "強い脱力感")
_FAKE_REPORT_SENTENCES = (
    "{drug}を摂取した後、{symptom}を自覚したとのこと。",
    "近医を受診し、{drug}との関連が疑われた。",
    "同日の夜に{symptom}が続いたため家族が連絡した。",
)
_OFFDOMAIN_SENTENCES = (
    "今日の天気は晴れで、午後から風が強まる見込み。",
    "新しい喫茶店が駅前に開店し、行列ができていた。",
    "週末の祭りでは太鼓の演奏と花火が予定されている。",
    "湖畔の遊歩道は紅葉の季節に多くの観光客で賑わう。",
)
_OTHER_LANGUAGE_SENTENCES = (
    "The committee reviewed the annual budget proposal in detail.",
    "Several bridges along the river will be closed for maintenance.",
    "The orchestra performed a new arrangement of the overture.",
    "Local volunteers organized a cleanup along the coastline.",
)

EXTRANEOUS_CATEGORIES = ("encyclopedic", "fake_icsr", "offdomain", "other_language")
# 14 wiki articles, 7 fake reports, 2 off-domain, 2 other-language out of 25
_CATEGORY_WEIGHTS = (14, 7, 2, 2)


def _category_counts(n: int) -> dict[str, int]:
    """Largest-remainder split of n across the four categories."""
    total = sum(_CATEGORY_WEIGHTS)
    exact = [n * w / total for w in _CATEGORY_WEIGHTS]
    counts = [int(x) for x in exact]
    remainders = sorted(range(4), key=lambda i: (exact[i] - counts[i], _CATEGORY_WEIGHTS[i]),
                        reverse=True)
    for i in range(n - sum(counts)):
        counts[remainders[i % 4]] += 1
    return dict(zip(EXTRANEOUS_CATEGORIES, counts))


def make_extraneous(rng: random.Random, doc_id: str, category: str) -> ExtraneousDoc:
    if category == "encyclopedic":
        text = "".join(rng.choice(_WIKI_SENTENCES) for _ in range(rng.randint(3, 5)))
        return ExtraneousDoc(doc_id, text, "ja", category)
    if category == "fake_icsr":
        # similar field-block shape, fabricated content words
        drug = rng.choice(_FAKE_DRUGS)
        symptom = rng.choice(_FAKE_SYMPTOMS)
        body = "report_type: spontaneous; country_of_occurrence: JP\n" + "".join(
            s.format(drug=drug, symptom=symptom)
            for s in rng.sample(_FAKE_REPORT_SENTENCES, 2))
        return ExtraneousDoc(doc_id, body, "ja", category)
    if category == "offdomain":
        text = "".join(rng.choice(_OFFDOMAIN_SENTENCES) for _ in range(rng.randint(2, 4)))
        return ExtraneousDoc(doc_id, text, "ja", category)
    if category == "other_language":
        text = " ".join(rng.choice(_OTHER_LANGUAGE_SENTENCES) for _ in range(rng.randint(2, 4)))
        return ExtraneousDoc(doc_id, text, "en", category)
    raise ValueError(f"unknown extraneous category {category!r}")


def synthesize_corpus(
    n_icsr: int,
    n_extraneous: int,
    seed: int,
    lex: Optional[Lexicon] = None,
) -> list[tuple[Union[IcsrDocument, ExtraneousDoc], str]]:
    """Reproducible labeled corpus: n_icsr case reports plus n_extraneous
    non-reports split across the four extraneous categories."""
    lex = lex or fixture_lexicon()
    rng = random.Random(seed)
    out: list[tuple[Union[IcsrDocument, ExtraneousDoc], str]] = []
    for i in range(n_icsr):
        out.append((make_icsr(rng, f"case-{seed}-{i:05d}", lex), "icsr"))
    counts = _category_counts(n_extraneous)
    i = 0
    for category in EXTRANEOUS_CATEGORIES:
        for _ in range(counts[category]):
            out.append((make_extraneous(rng, f"extra-{seed}-{i:05d}", category), "extraneous"))
            i += 1
    return out


# --- embedding vocabulary ------------------------------------------------------

_EMB_TOKEN_RE = re.compile(r"[A-Za-z0-9_\-]+|\S")
_NUMERIC_RE = re.compile(r"^[\d\-/:.]+$")


def embedding_tokenize(text: str) -> list[str]:
    """Latin/digit runs as words, any other non-space character alone."""
    return _EMB_TOKEN_RE.findall(text)


def in_domain_vocabulary(lex: Optional[Lexicon] = None) -> frozenset[str]:
    """Tokens characteristic of generated case-report bodies.

    Covers the template text, the field names and fixed values, and the ja
    lexicon surfaces. Dates and numbers are handled by regex, not listed.
    """
    lex = lex or fixture_lexicon()
    pieces = [ja for ja, _ in SENTENCE_TEMPLATES]
    pieces += list(_SEX_JA.values())
    pieces += list(FIELD_SENTENCES)
    pieces += ["spontaneous", "JP", "non_serious", ";", ":"]
    pieces += list(_SERIOUSNESS_POOL) + ["death", "congenital_anomaly"]
    for entry in lex.entries:
        for text, lang in entry.surface_forms:
            if lang == "ja":
                pieces.append(text)
    vocab: set[str] = set()
    for piece in pieces:
        for token in embedding_tokenize(re.sub(r"\{\w+\}", " ", piece)):
            vocab.add(token.lower())
    return frozenset(vocab)


def in_domain_token(token: str, vocab: frozenset[str]) -> bool:
    return token.lower() in vocab or bool(_NUMERIC_RE.match(token))
