"""Translation model adapters: a deterministic mock and an HTTP client.

The mock is a pure function of (input, config, seeds). Corruptions are armed
explicitly and every corruption emits its own ground-truth record, so
guardrail catch rates are always computed against injector truth rather than
heuristics.
"""

from __future__ import annotations

import hashlib
import json
import random
import re
import threading
import time
from dataclasses import dataclass
from typing import Any, Mapping, Optional

import httpx
import numpy as np

from . import corpus as corpus_mod
from .errors import (
    AdapterUnavailable,
    EmptyInput,
    GenerationFailed,
    ProtocolError,
)
from .lexicon import ADVERSE_EVENT, DRUG, Lexicon, canonical_set, normalize
from .tluq import FULL, TOPK, TokenRecord

HALLUCINATE_DRUG = "hallucinate_drug"
DROP_AE = "drop_ae"
MISSPELL_DRUG_WITH_DUPLICATE = "misspell_drug_with_duplicate"
MISSPELL_DRUG_ONLY = "misspell_drug_only"
SWAP_DATE = "swap_date"
NONSENSE_PHRASE = "nonsense_phrase"

CORRUPTION_KINDS = (
    HALLUCINATE_DRUG,
    DROP_AE,
    MISSPELL_DRUG_WITH_DUPLICATE,
    MISSPELL_DRUG_ONLY,
    SWAP_DATE,
    NONSENSE_PHRASE,
)


@dataclass(frozen=True)
class CorruptionSpec:
    kind: str
    seed: int
    params: tuple[tuple[str, Any], ...] = ()

    def __post_init__(self):
        if self.kind not in CORRUPTION_KINDS:
            raise ValueError(f"unknown corruption kind {self.kind!r}")


@dataclass(frozen=True)
class CorruptionRecord:
    """Injector ground truth for one applied corruption."""

    kind: str
    seed: int
    applied: bool
    canonical_id: Optional[str] = None
    injected_text: Optional[str] = None
    removed_text: Optional[str] = None
    position: Optional[int] = None
    source_ae_ids: tuple[str, ...] = ()
    detail: str = ""

    def to_dict(self) -> dict:
        return {
            "kind": self.kind,
            "seed": self.seed,
            "applied": self.applied,
            "canonical_id": self.canonical_id,
            "injected_text": self.injected_text,
            "removed_text": self.removed_text,
            "position": self.position,
            "source_ae_ids": list(self.source_ae_ids),
            "detail": self.detail,
        }


@dataclass(frozen=True)
class GenerationResult:
    target_text: str
    tokens: tuple[TokenRecord, ...]
    source_token_embeddings: tuple
    generation_config_echo: tuple[tuple[str, Any], ...] = ()
    corruption_truth: Optional[CorruptionRecord] = None

    def __post_init__(self):
        total = len(self.target_text.encode("utf-8"))
        pos = 0
        for token in self.tokens:
            if token.byte_span[0] != pos:
                raise ValueError(
                    f"token spans must tile the target text; gap at byte {pos}")
            pos = token.byte_span[1]
        if self.tokens and pos != total:
            raise ValueError(f"token spans cover {pos} of {total} bytes")


def tile_tokens(text: str) -> list[tuple[str, tuple[int, int]]]:
    """Cut text at every whitespace->non-whitespace transition so the pieces
    tile it exactly (each word keeps its trailing whitespace)."""
    if not text:
        return []
    cuts = [0]
    for i in range(1, len(text)):
        if not text[i].isspace() and text[i - 1].isspace():
            cuts.append(i)
    cuts.append(len(text))
    byte_of = [0]
    for ch in text:
        byte_of.append(byte_of[-1] + len(ch.encode("utf-8")))
    return [
        (text[a:b], (byte_of[a], byte_of[b]))
        for a, b in zip(cuts, cuts[1:])
    ]


def _digest(*parts) -> int:
    h = hashlib.sha256()
    for part in parts:
        h.update(str(part).encode("utf-8"))
        h.update(b"\x1f")
    return int.from_bytes(h.digest()[:8], "little")


# --- mock embedding profiles ---------------------------------------------------

_PROFILES = {
    # (anchor pull for in-domain tokens, per-token noise, per-document noise)
    "separable": (8.0, 0.3, 0.0),
    "noisy": (0.7, 1.0, 0.35),
}


class MockAdapter:
    """Deterministic stand-in for the translation model.

    Translation goes through an explicit fixture table when one is given and
    falls back to the rule-based reference translator. Embeddings are
    seeded-hash projections with a class-conditional pull toward an anchor
    direction for in-domain tokens; the "separable" profile makes generated
    case reports and extraneous texts fully separable after pooling, the
    "noisy" profile leaves overlap.
    """

    def __init__(
        self,
        lexicon: Optional[Lexicon] = None,
        profile: str = "separable",
        seed: int = 0,
        source_language: str = "ja",
        target_language: str = "en",
        translation_table: Optional[Mapping[str, str]] = None,
        corruption: Optional[CorruptionSpec] = None,
        dimension: int = 32,
        vocab_size: int = 24,
    ):
        if profile not in _PROFILES:
            raise ValueError(f"unknown mock profile {profile!r}")
        self.lexicon = lexicon or corpus_mod.fixture_lexicon()
        self.profile = profile
        self.seed = seed
        self.source_language = source_language
        self.target_language = target_language
        self.translation_table = dict(translation_table or {})
        self.corruption = corruption
        self.dimension = dimension
        self.vocab_size = vocab_size
        self._vocab = corpus_mod.in_domain_vocabulary(self.lexicon)
        anchor = np.zeros(dimension)
        anchor[0] = 1.0
        anchor_scale, self._noise, self._doc_noise = _PROFILES[profile]
        self._anchor = anchor * anchor_scale
        self._lock = threading.Lock()
        self._translate_calls = 0
        self._embed_calls = 0
        # token vectors depend only on (seed, profile, token): memoized, and
        # shared with armed() clones
        self._vec_cache: dict[str, np.ndarray] = {}

    # instrumentation (used by pipeline tests to observe short-circuiting)
    @property
    def translate_calls(self) -> int:
        return self._translate_calls

    @property
    def embed_calls(self) -> int:
        return self._embed_calls

    def armed(self, corruption: Optional[CorruptionSpec]) -> "MockAdapter":
        """A sibling adapter with the given corruption armed."""
        clone = MockAdapter(
            lexicon=self.lexicon,
            profile=self.profile,
            seed=self.seed,
            source_language=self.source_language,
            target_language=self.target_language,
            translation_table=self.translation_table,
            corruption=corruption,
            dimension=self.dimension,
            vocab_size=self.vocab_size,
        )
        clone._vec_cache = self._vec_cache
        return clone

    # --- embeddings -------------------------------------------------------

    def _token_vector(self, token: str) -> np.ndarray:
        cached = self._vec_cache.get(token)
        if cached is not None:
            return cached
        rng = np.random.default_rng(_digest("emb", self.seed, token.lower()))
        direction = rng.standard_normal(self.dimension)
        direction /= np.linalg.norm(direction)
        vec = self._noise * direction
        if corpus_mod.in_domain_token(token, self._vocab):
            vec = vec + self._anchor
        vec.setflags(write=False)
        self._vec_cache[token] = vec
        return vec

    def embed_source(self, text: str) -> list[np.ndarray]:
        if not text:
            raise EmptyInput("cannot embed an empty string")
        with self._lock:
            self._embed_calls += 1
        tokens = corpus_mod.embedding_tokenize(text)
        if not tokens:
            raise EmptyInput("text contains no embeddable tokens")
        shift = 0.0
        if self._doc_noise:
            rng = np.random.default_rng(_digest("doc", self.seed, text))
            direction = rng.standard_normal(self.dimension)
            shift = self._doc_noise * direction / np.linalg.norm(direction)
        return [self._token_vector(tok) + shift for tok in tokens]

    # --- generation ---------------------------------------------------------

    def _strip_instruction(self, doc_serialized: str) -> str:
        if "\n" not in doc_serialized:
            raise GenerationFailed("serialized input has no instruction line")
        return doc_serialized.split("\n", 1)[1]

    def _token_records(self, target_text: str) -> tuple[TokenRecord, ...]:
        tokens = tile_tokens(target_text)
        if not tokens:
            return ()
        rng = np.random.default_rng(_digest("tok", self.seed, target_text))
        spreads = rng.uniform(0.2, 4.0, len(tokens))
        logits = rng.normal(0.0, 1.0, (len(tokens), self.vocab_size)) * spreads[:, None]
        shifted = np.exp(logits - logits.max(axis=1, keepdims=True))
        probs = shifted / shifted.sum(axis=1, keepdims=True)
        return tuple(
            TokenRecord(
                token_text=text,
                byte_span=span,
                distribution=tuple(float(p) for p in probs[index]),
                distribution_kind=FULL,
            )
            for index, (text, span) in enumerate(tokens)
        )

    def translate(self, doc_serialized: str, config: Optional[Mapping] = None) -> GenerationResult:
        with self._lock:
            self._translate_calls += 1
        body = self._strip_instruction(doc_serialized)
        target = self.translation_table.get(body)
        if target is None:
            target = corpus_mod.faithful_translation(body, self.lexicon)
        truth = None
        if self.corruption is not None:
            target, truth = self._apply_corruption(target, body, self.corruption)
        return GenerationResult(
            target_text=target,
            tokens=self._token_records(target),
            source_token_embeddings=tuple(
                tuple(float(x) for x in vec) for vec in self.embed_source(body)),
            generation_config_echo=tuple(sorted((config or {}).items())),
            corruption_truth=truth,
        )

    # --- corruptions ----------------------------------------------------------

    def _drug_candidates(self, body: str) -> list[str]:
        """Drugs with a target-language surface whose whole link neighborhood
        is absent from the source."""
        source_ids = canonical_set(
            self.lexicon.find_terms(body, self.source_language), DRUG)
        excluded = self.lexicon.expand_links(source_ids)
        out = []
        for cid in sorted(self.lexicon.ids_of_kind(DRUG)):
            if cid in excluded:
                continue
            if self.lexicon.surface_for(cid, self.target_language) is None:
                continue
            if self.lexicon.expand_links({cid}) & excluded:
                continue
            out.append(cid)
        return out

    def _insert_sentence(self, target: str, sentence: str, rng: random.Random) -> tuple[str, int]:
        ends = [m.end() for m in re.finditer(r"\. ", target)]
        ends.append(len(target))
        pos = rng.choice(ends)
        lead = "" if pos == 0 or target[:pos].endswith(" ") else " "
        inserted = lead + sentence
        return target[:pos] + inserted + target[pos:], pos + len(lead)

    def _misspell(self, surface: str, rng: random.Random) -> str:
        """Deterministic non-lexicon misspelling of a surface form."""
        known = self.lexicon.normalized_surfaces()
        letters = [i for i, ch in enumerate(surface) if ch.isalpha()]
        attempts = []
        for i in letters:
            attempts.append(surface[:i] + surface[i + 1:])                        # drop
            attempts.append(surface[:i] + surface[i] * 2 + surface[i + 1:])       # double
        for i in range(len(surface) - 1):
            attempts.append(surface[:i] + surface[i + 1] + surface[i] + surface[i + 2:])  # swap
        rng.shuffle(attempts)
        for candidate in attempts:
            if candidate != surface and normalize(candidate) not in known and normalize(candidate):
                return candidate
        raise GenerationFailed(f"could not derive a misspelling of {surface!r}")

    def _apply_corruption(
        self, target: str, body: str, spec: CorruptionSpec
    ) -> tuple[str, CorruptionRecord]:
        rng = random.Random(spec.seed)
        kind = spec.kind

        if kind in (HALLUCINATE_DRUG, MISSPELL_DRUG_ONLY):
            candidates = self._drug_candidates(body)
            if not candidates:
                return target, CorruptionRecord(kind, spec.seed, applied=False,
                                                detail="no injectable drug")
            cid = rng.choice(candidates)
            surface = self.lexicon.surface_for(cid, self.target_language)
            text = surface if kind == HALLUCINATE_DRUG else self._misspell(surface, rng)
            corrupted, pos = self._insert_sentence(
                target, f"The patient also received {text}.", rng)
            return corrupted, CorruptionRecord(
                kind, spec.seed, applied=True, canonical_id=cid,
                injected_text=text, position=pos,
                detail="exact surface" if kind == HALLUCINATE_DRUG else "non-lexicon misspelling")

        if kind == MISSPELL_DRUG_WITH_DUPLICATE:
            present = sorted(canonical_set(
                self.lexicon.find_terms(target, self.target_language), DRUG))
            if not present:
                return target, CorruptionRecord(kind, spec.seed, applied=False,
                                                detail="no drug mention in target")
            cid = rng.choice(present)
            surface = self.lexicon.surface_for(cid, self.target_language)
            misspelled = self._misspell(surface, rng)
            corrupted, pos = self._insert_sentence(
                target, f"The patient also received {misspelled}.", rng)
            return corrupted, CorruptionRecord(
                kind, spec.seed, applied=True, canonical_id=cid,
                injected_text=misspelled, position=pos,
                detail="correct spelling kept alongside the misspelling")

        if kind == DROP_AE:
            source_ae_ids = tuple(sorted(canonical_set(
                self.lexicon.find_terms(body, self.source_language), ADVERSE_EVENT)))
            target_ae_ids = sorted(canonical_set(
                self.lexicon.find_terms(target, self.target_language), ADVERSE_EVENT))
            droppable = [cid for cid in target_ae_ids if cid in source_ae_ids]
            if not droppable:
                return target, CorruptionRecord(kind, spec.seed, applied=False,
                                                source_ae_ids=source_ae_ids,
                                                detail="no droppable adverse event")
            cid = rng.choice(droppable)
            corrupted = target
            removed = None
            for text, lang in self.lexicon.entry(cid).surface_forms:
                if lang != self.target_language:
                    continue
                pattern = re.compile(re.escape(text), re.IGNORECASE)
                if pattern.search(corrupted):
                    removed = text
                    corrupted = pattern.sub("the reported condition", corrupted)
            return corrupted, CorruptionRecord(
                kind, spec.seed, applied=True, canonical_id=cid,
                removed_text=removed, source_ae_ids=source_ae_ids,
                detail="all target mentions replaced")

        if kind == SWAP_DATE:
            dates = list(re.finditer(r"\d{4}-\d{2}-\d{2}", target))
            if not dates:
                return target, CorruptionRecord(kind, spec.seed, applied=False,
                                                detail="no date in target")
            m = rng.choice(dates)
            day = int(m.group(0)[8:10])
            swapped = m.group(0)[:8] + f"{day % 28 + 1:02d}"
            corrupted = target[:m.start()] + swapped + target[m.end():]
            return corrupted, CorruptionRecord(
                kind, spec.seed, applied=True, removed_text=m.group(0),
                injected_text=swapped, position=m.start(), detail="day shifted")

        if kind == NONSENSE_PHRASE:
            syllables = ("zre", "quath", "bol", "vim", "trask", "orn", "plu", "gex")
            words = ["".join(rng.choice(syllables) for _ in range(rng.randint(2, 3)))
                     for _ in range(3)]
            phrase = f"The {words[0]} {words[1]} was {words[2]}ed."
            corrupted, pos = self._insert_sentence(target, phrase, rng)
            return corrupted, CorruptionRecord(
                kind, spec.seed, applied=True, injected_text=phrase, position=pos,
                detail="nonsense insertion")

        raise GenerationFailed(f"unhandled corruption kind {kind!r}")


# --- HTTP adapter ---------------------------------------------------------------

class HttpAdapter:
    """Client for a real inference server speaking the documented protocol.

    POST /v1/translate {input, config} ->
        {target_text, tokens: [{text, span, topk: [[token, p], ...]}],
         source_embeddings: [[...], ...]}
    GET /v1/health -> {version, embedding_dim}
    """

    def __init__(self, endpoint: str, timeout: float = 10.0, retries: int = 2,
                 serial_only: bool = False):
        self.endpoint = endpoint.rstrip("/")
        self.timeout = timeout
        self.retries = retries
        self.serial_only = serial_only
        self._client = httpx.Client(timeout=timeout)
        health = self._request("GET", "/v1/health")
        try:
            self.version = health["version"]
            self.embedding_dim = int(health["embedding_dim"])
        except (KeyError, TypeError, ValueError) as exc:
            raise ProtocolError(f"health response missing field: {exc}") from exc

    def close(self) -> None:
        self._client.close()

    def _request(self, method: str, path: str, payload: Optional[dict] = None) -> dict:
        last: Optional[Exception] = None
        for attempt in range(self.retries + 1):
            try:
                response = self._client.request(
                    method, self.endpoint + path,
                    json=payload if method == "POST" else None)
                response.raise_for_status()
                return response.json()
            except (httpx.TransportError, httpx.HTTPStatusError) as exc:
                last = exc
                if attempt < self.retries:
                    time.sleep(min(0.05 * (attempt + 1), 0.5))
            except json.JSONDecodeError as exc:
                raise ProtocolError(f"non-JSON response from {path}") from exc
        raise AdapterUnavailable(f"{self.endpoint}{path} unreachable after "
                                 f"{self.retries + 1} attempts: {last}")

    def translate(self, doc_serialized: str, config: Optional[Mapping] = None) -> GenerationResult:
        payload = {"input": doc_serialized, "config": dict(config or {})}
        obj = self._request("POST", "/v1/translate", payload)
        for key in ("target_text", "tokens", "source_embeddings"):
            if key not in obj:
                raise ProtocolError(f"translate response missing field {key!r}")
        try:
            tokens = tuple(
                TokenRecord(
                    token_text=t["text"],
                    byte_span=(int(t["span"][0]), int(t["span"][1])),
                    distribution=tuple((tok, float(p)) for tok, p in t["topk"]),
                    distribution_kind=TOPK,
                )
                for t in obj["tokens"]
            )
            embeddings = tuple(
                tuple(float(x) for x in vec) for vec in obj["source_embeddings"])
        except (KeyError, TypeError, ValueError, IndexError) as exc:
            raise ProtocolError(f"translate response malformed: {exc}") from exc
        return GenerationResult(
            target_text=obj["target_text"],
            tokens=tokens,
            source_token_embeddings=embeddings,
            generation_config_echo=tuple(sorted((config or {}).items())),
        )

    def embed_source(self, text: str) -> list[np.ndarray]:
        if not text:
            raise EmptyInput("cannot embed an empty string")
        result = self.translate("embed only\n" + text, config={"mode": "embed_only"})
        return list(result.source_token_embeddings)
