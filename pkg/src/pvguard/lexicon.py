"""Drug and adverse-event vocabularies with span-level term matching.

One :class:`TermEntry` carries every surface form of a concept across
languages, so a Japanese source mention and an English target mention meet on
the same canonical_id. Matching is exact after normalization: misspellings do
not match, by contract.
"""

from __future__ import annotations

import re
import unicodedata
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Optional, Union

from .errors import LexiconFormatError, UnknownId, UnknownLanguage

_WS_RE = re.compile(r"\s+")

# Languages written without whitespace word boundaries: substring matching.
DEFAULT_NO_BOUNDARY_LANGUAGES = frozenset({"ja", "zh", "ko", "th"})

DRUG = "drug"
ADVERSE_EVENT = "adverse_event"
KINDS = (DRUG, ADVERSE_EVENT)


def normalize(text: str) -> str:
    """Canonical text form: NFKC-folded, case-folded, whitespace-collapsed.

    The case fold is sandwiched between two NFKC passes (the NFKC_Casefold
    construction), which makes the whole transform idempotent.
    """
    s = unicodedata.normalize("NFKC", text)
    s = unicodedata.normalize("NFKC", s.casefold())
    return _WS_RE.sub(" ", s).strip()


def _normalize_segment(seg: str) -> str:
    s = unicodedata.normalize("NFKC", seg)
    return unicodedata.normalize("NFKC", s.casefold())


def _normalized_with_map(text: str) -> tuple[str, list[tuple[int, int]]]:
    """Normalize while tracking origins.

    Returns the normalized string and, per normalized character, the
    (start, end) character span of the original text it came from. The text is
    processed in combining-sequence segments so canonical composition cannot
    leak across map entries.
    """
    chars: list[str] = []
    spans: list[tuple[int, int]] = []
    n = len(text)
    i = 0
    while i < n:
        j = i + 1
        while j < n and unicodedata.combining(text[j]) != 0:
            j += 1
        for ch in _normalize_segment(text[i:j]):
            chars.append(ch)
            spans.append((i, j))
        i = j

    # collapse whitespace runs to a single space, drop leading/trailing runs
    out_chars: list[str] = []
    out_spans: list[tuple[int, int]] = []
    k = 0
    m = len(chars)
    while k < m:
        if chars[k].isspace():
            run_end = k
            while run_end < m and chars[run_end].isspace():
                run_end += 1
            if out_chars and run_end < m:
                out_chars.append(" ")
                out_spans.append((spans[k][0], spans[run_end - 1][1]))
            k = run_end
        else:
            out_chars.append(chars[k])
            out_spans.append(spans[k])
            k += 1
    return "".join(out_chars), out_spans


@dataclass(frozen=True)
class TermEntry:
    """A canonical concept with its multilingual surface forms."""

    canonical_id: str
    kind: str
    surface_forms: tuple[tuple[str, str], ...]  # (text, language)
    links: tuple[str, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "surface_forms", tuple(tuple(sf) for sf in self.surface_forms))
        object.__setattr__(self, "links", tuple(self.links))
        if self.kind not in KINDS:
            raise LexiconFormatError(f"{self.canonical_id}: unknown kind {self.kind!r}")
        if not self.surface_forms:
            raise LexiconFormatError(f"{self.canonical_id}: surface_forms must be non-empty")
        for text, language in self.surface_forms:
            if not normalize(text):
                raise LexiconFormatError(
                    f"{self.canonical_id}: surface form {text!r} is empty after normalization")
            if not language:
                raise LexiconFormatError(f"{self.canonical_id}: surface form without language")
        if self.kind == ADVERSE_EVENT and self.links:
            raise LexiconFormatError(f"{self.canonical_id}: adverse_event entries cannot have links")


@dataclass(frozen=True)
class TermMatch:
    """One exact term hit. Span is a UTF-8 byte range into the searched text."""

    canonical_id: str
    kind: str
    span: tuple[int, int]
    matched_surface: str
    language: str


class _TrieNode:
    __slots__ = ("children", "terminals")

    def __init__(self):
        self.children: dict[str, _TrieNode] = {}
        self.terminals: list[str] = []  # canonical ids ending here


def _is_word_char(ch: str) -> bool:
    return ch.isalnum() or ch == "_"


class Lexicon:
    """Immutable vocabulary with per-language matching tries."""

    def __init__(
        self,
        entries: Iterable[TermEntry],
        normalization_version: str = "nfkc-casefold-1",
        closed_language_set: bool = False,
        no_boundary_languages: frozenset[str] = DEFAULT_NO_BOUNDARY_LANGUAGES,
    ):
        self.entries: tuple[TermEntry, ...] = tuple(entries)
        self.normalization_version = normalization_version
        self.closed_language_set = closed_language_set
        self.no_boundary_languages = frozenset(no_boundary_languages)

        self._by_id: dict[str, TermEntry] = {}
        for entry in self.entries:
            if entry.canonical_id in self._by_id:
                raise LexiconFormatError(f"duplicate canonical_id {entry.canonical_id!r}")
            self._by_id[entry.canonical_id] = entry

        seen_surfaces: dict[tuple[str, str, str], str] = {}
        self.languages: frozenset[str] = frozenset(
            lang for entry in self.entries for _, lang in entry.surface_forms)
        # trie per (language, kind)
        self._tries: dict[tuple[str, str], _TrieNode] = {}
        for entry in self.entries:
            for text, lang in entry.surface_forms:
                norm = normalize(text)
                key = (entry.kind, lang, norm)
                other = seen_surfaces.get(key)
                if other is not None and other != entry.canonical_id:
                    raise LexiconFormatError(
                        f"surface {text!r} ({lang}) shared by {other!r} and "
                        f"{entry.canonical_id!r} within kind {entry.kind!r}")
                seen_surfaces[key] = entry.canonical_id
                root = self._tries.setdefault((lang, entry.kind), _TrieNode())
                node = root
                for ch in norm:
                    node = node.children.setdefault(ch, _TrieNode())
                if entry.canonical_id not in node.terminals:
                    node.terminals.append(entry.canonical_id)

        for entry in self.entries:
            for linked in entry.links:
                target = self._by_id.get(linked)
                if target is None:
                    raise LexiconFormatError(
                        f"{entry.canonical_id} links unknown id {linked!r}")
                if target.kind != DRUG:
                    raise LexiconFormatError(
                        f"{entry.canonical_id} links non-drug id {linked!r}")
                if entry.canonical_id not in target.links:
                    raise LexiconFormatError(
                        f"asymmetric link: {entry.canonical_id} -> {linked} has no reverse edge")

    def __len__(self) -> int:
        return len(self.entries)

    def entry(self, canonical_id: str) -> TermEntry:
        try:
            return self._by_id[canonical_id]
        except KeyError:
            raise UnknownId(f"unknown canonical_id {canonical_id!r}") from None

    def surface_for(self, canonical_id: str, language: str) -> Optional[str]:
        """First surface form of the entry in the given language, if any."""
        for text, lang in self.entry(canonical_id).surface_forms:
            if lang == language:
                return text
        return None

    def ids_of_kind(self, kind: str) -> frozenset[str]:
        return frozenset(e.canonical_id for e in self.entries if e.kind == kind)

    def normalized_surfaces(self, kind: Optional[str] = None) -> frozenset[str]:
        return frozenset(
            normalize(text)
            for e in self.entries if kind is None or e.kind == kind
            for text, _ in e.surface_forms)

    # --- matching ---------------------------------------------------------

    def _scan(
        self,
        ntext: str,
        spans: list[tuple[int, int]],
        root: _TrieNode,
        kind: str,
        language: str,
        word_boundaries: bool,
        byte_offset: list[int],
    ) -> list[TermMatch]:
        matches: list[TermMatch] = []
        n = len(ntext)
        i = 0
        while i < n:
            if word_boundaries and i > 0 and _is_word_char(ntext[i - 1]) and _is_word_char(ntext[i]):
                i += 1
                continue
            # match must begin where an original character begins
            if i > 0 and spans[i - 1] == spans[i]:
                i += 1
                continue
            node = root
            j = i
            best_end = -1
            best_ids: list[str] = []
            while j < n and ntext[j] in node.children:
                node = node.children[ntext[j]]
                j += 1
                if node.terminals:
                    if word_boundaries and j < n and _is_word_char(ntext[j]) and _is_word_char(ntext[j - 1]):
                        continue
                    if j < n and spans[j - 1] == spans[j]:
                        continue  # ends inside a multi-char normalization
                    best_end = j
                    best_ids = node.terminals
            if best_end > 0:
                start_char, end_char = spans[i][0], spans[best_end - 1][1]
                for cid in best_ids:
                    matches.append(TermMatch(
                        canonical_id=cid,
                        kind=kind,
                        span=(byte_offset[start_char], byte_offset[end_char]),
                        matched_surface=ntext[i:best_end],
                        language=language,
                    ))
                i = best_end
            else:
                i += 1
        return matches

    def find_terms(
        self,
        text: str,
        language: str,
        kind_filter: Optional[str] = None,
    ) -> list[TermMatch]:
        """All non-overlapping term hits, leftmost-longest, sorted by span start.

        Word-boundary alignment is enforced for languages with whitespace
        boundaries; substring matching applies otherwise (e.g. ja). When
        kind_filter is None both vocabularies are scanned independently and
        the results merged, so spans of *different* kinds may coincide.
        """
        if self.closed_language_set and language not in self.languages:
            raise UnknownLanguage(f"language {language!r} not in lexicon language set")
        kinds = KINDS if kind_filter is None else (kind_filter,)
        ntext, spans = _normalized_with_map(text)
        byte_offset = [0]
        for ch in text:
            byte_offset.append(byte_offset[-1] + len(ch.encode("utf-8")))
        word_boundaries = language not in self.no_boundary_languages
        matches: list[TermMatch] = []
        for kind in kinds:
            root = self._tries.get((language, kind))
            if root is None:
                continue
            matches.extend(self._scan(
                ntext, spans, root, kind, language, word_boundaries, byte_offset))
        matches.sort(key=lambda m: (m.span[0], m.span[1], m.kind, m.canonical_id))
        return matches

    def expand_links(self, ids: Iterable[str]) -> frozenset[str]:
        """Closure of the id set under generic-trade link edges."""
        frontier = list(ids)
        closure: set[str] = set()
        while frontier:
            cid = frontier.pop()
            if cid in closure:
                continue
            closure.add(cid)
            frontier.extend(self.entry(cid).links)
        return frozenset(closure)


def canonical_set(matches: Iterable[TermMatch], kind: str) -> frozenset[str]:
    """Deduplicated canonical ids of the given kind."""
    return frozenset(m.canonical_id for m in matches if m.kind == kind)


def load_lexicon_tsv(
    source: Union[str, Path],
    closed_language_set: bool = False,
    no_boundary_languages: frozenset[str] = DEFAULT_NO_BOUNDARY_LANGUAGES,
) -> Lexicon:
    """Load a lexicon from TSV: canonical_id, kind, language, surface, links.

    Links are comma-separated canonical ids and are unioned across rows of the
    same entry. Lines starting with "#" and blank lines are skipped. Fails
    fast on any format or invariant violation.
    """
    path = Path(source)
    ids_in_order: list[str] = []
    kinds: dict[str, str] = {}
    surfaces: dict[str, list[tuple[str, str]]] = {}
    links: dict[str, set[str]] = {}
    for lineno, raw in enumerate(path.read_text(encoding="utf-8").splitlines(), start=1):
        line = raw.strip("\n")
        if not line.strip() or line.lstrip().startswith("#"):
            continue
        cols = line.split("\t")
        if len(cols) not in (4, 5):
            raise LexiconFormatError(f"{path}:{lineno}: expected 4 or 5 columns, got {len(cols)}")
        cid, kind, language, surface = (c.strip() for c in cols[:4])
        linked = [s.strip() for s in cols[4].split(",") if s.strip()] if len(cols) == 5 else []
        if not cid:
            raise LexiconFormatError(f"{path}:{lineno}: empty canonical_id")
        if cid not in kinds:
            ids_in_order.append(cid)
            kinds[cid] = kind
            surfaces[cid] = []
            links[cid] = set()
        elif kinds[cid] != kind:
            raise LexiconFormatError(f"{path}:{lineno}: {cid!r} declared with two kinds")
        surfaces[cid].append((surface, language))
        links[cid].update(linked)
    entries = [
        TermEntry(
            canonical_id=cid,
            kind=kinds[cid],
            surface_forms=tuple(surfaces[cid]),
            links=tuple(sorted(links[cid])),
        )
        for cid in ids_in_order
    ]
    return Lexicon(
        entries,
        closed_language_set=closed_language_set,
        no_boundary_languages=no_boundary_languages,
    )
