"""Document-level anomaly scoring against a cache of known-good embeddings.

A submitted document is pooled to one vector and scored by the mean Euclidean
distance to its k nearest cache entries; distances above the threshold flag
the document before any translation happens.
"""

from __future__ import annotations

import math
import struct
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence, Union

import numpy as np

from .errors import (
    CacheFormatError,
    DimensionMismatch,
    DuplicateId,
    EmbeddingFailed,
    EmptyInput,
    InvalidFpr,
    KTooLarge,
    PvGuardError,
)

ACCEPT = "accept"
FLAG = "flag"

_MAGIC = b"PVGC"
_VERSION = 1


@dataclass(frozen=True)
class DluqScore:
    distance: float
    k_used: int
    nearest_ids: tuple[str, ...]
    verdict: str  # accept | flag

    def to_dict(self) -> dict:
        return {
            "distance": self.distance,
            "k_used": self.k_used,
            "nearest_ids": list(self.nearest_ids),
            "verdict": self.verdict,
        }


class EmbeddingCache:
    """Immutable set of (doc_id, vector) entries with a fixed dimension.

    Vectors are held as float32, matching the on-disk representation, so a
    save/load round trip is bit-exact.
    """

    def __init__(self, dimension: int, entries: Sequence[tuple[str, Sequence[float]]],
                 source_corpus_tag: str = ""):
        if dimension <= 0:
            raise ValueError("dimension must be positive")
        self.dimension = int(dimension)
        self.source_corpus_tag = source_corpus_tag
        self.doc_ids: tuple[str, ...] = tuple(doc_id for doc_id, _ in entries)
        if len(set(self.doc_ids)) != len(self.doc_ids):
            raise DuplicateId("cache doc_ids must be unique")
        vectors = np.asarray([vec for _, vec in entries], dtype=np.float32)
        if len(self.doc_ids) == 0:
            vectors = vectors.reshape(0, self.dimension)
        if vectors.ndim != 2 or vectors.shape[1] != self.dimension:
            raise DimensionMismatch(
                f"cache vectors must have dimension {self.dimension}, got shape {vectors.shape}")
        if not np.isfinite(vectors).all():
            raise ValueError("cache vectors must be finite")
        self.vectors = vectors
        self.vectors.setflags(write=False)

    def __len__(self) -> int:
        return len(self.doc_ids)

    def save(self, path: Union[str, Path]) -> None:
        with open(path, "wb") as fh:
            fh.write(_MAGIC)
            fh.write(struct.pack("<III", _VERSION, self.dimension, len(self)))
            tag = self.source_corpus_tag.encode("utf-8")
            fh.write(struct.pack("<I", len(tag)))
            fh.write(tag)
            for doc_id, vec in zip(self.doc_ids, self.vectors):
                raw = doc_id.encode("utf-8")
                fh.write(struct.pack("<I", len(raw)))
                fh.write(raw)
                fh.write(vec.astype("<f4").tobytes())

    @classmethod
    def load(cls, path: Union[str, Path]) -> "EmbeddingCache":
        data = Path(path).read_bytes()
        if data[:4] != _MAGIC:
            raise CacheFormatError(f"{path}: not an embedding cache file")
        try:
            version, dimension, count = struct.unpack_from("<III", data, 4)
            if version != _VERSION:
                raise CacheFormatError(f"{path}: unsupported cache version {version}")
            offset = 16
            (tag_len,) = struct.unpack_from("<I", data, offset)
            offset += 4
            tag = data[offset:offset + tag_len].decode("utf-8")
            offset += tag_len
            entries = []
            vec_bytes = dimension * 4
            for _ in range(count):
                (id_len,) = struct.unpack_from("<I", data, offset)
                offset += 4
                doc_id = data[offset:offset + id_len].decode("utf-8")
                offset += id_len
                vec = np.frombuffer(data, dtype="<f4", count=dimension, offset=offset)
                offset += vec_bytes
                entries.append((doc_id, vec))
            if offset != len(data):
                raise CacheFormatError(f"{path}: trailing bytes after {count} entries")
        except (struct.error, UnicodeDecodeError, ValueError) as exc:
            raise CacheFormatError(f"{path}: truncated or corrupt cache: {exc}") from exc
        return cls(dimension=dimension, entries=entries, source_corpus_tag=tag)


def pool_embedding(token_embeddings: Sequence[Sequence[float]]) -> np.ndarray:
    """Average-pool token vectors into one document vector."""
    if len(token_embeddings) == 0:
        raise EmptyInput("cannot pool an empty embedding list")
    matrix = np.asarray(token_embeddings, dtype=np.float64)
    if matrix.ndim != 2:
        raise DimensionMismatch("token embeddings must share one dimension")
    if not np.isfinite(matrix).all():
        raise ValueError("token embeddings must be finite")
    return matrix.mean(axis=0)


def build_cache(docs, embedder, source_corpus_tag: str = "") -> EmbeddingCache:
    """Embed and pool each document into a cache entry.

    `embedder` is a model adapter exposing embed_source; documents are
    rendered with the same field-block serialization used at scoring time.
    Embedder failures are re-raised carrying the offending doc_id.
    """
    from .icsr import serialize_body  # local import to avoid a cycle

    docs = list(docs)
    if not docs:
        raise EmptyInput("cannot build a cache from zero documents")
    seen: set[str] = set()
    entries = []
    for doc in docs:
        if doc.case_id in seen:
            raise DuplicateId(f"duplicate doc_id {doc.case_id!r}")
        seen.add(doc.case_id)
        try:
            token_vectors = embedder.embed_source(serialize_body(doc))
        except PvGuardError as exc:
            raise EmbeddingFailed(doc.case_id, str(exc)) from exc
        entries.append((doc.case_id, pool_embedding(token_vectors).astype(np.float32)))
    dimension = entries[0][1].shape[0]
    return EmbeddingCache(dimension=dimension, entries=entries,
                          source_corpus_tag=source_corpus_tag)


def _distances(doc_embedding: Sequence[float], cache: EmbeddingCache) -> np.ndarray:
    query = np.asarray(doc_embedding, dtype=np.float32).astype(np.float64)
    if query.ndim != 1 or query.shape[0] != cache.dimension:
        raise DimensionMismatch(
            f"query dimension {query.shape} does not match cache dimension {cache.dimension}")
    diff = cache.vectors.astype(np.float64) - query
    return np.sqrt((diff * diff).sum(axis=1))


def score_document(
    doc_embedding: Sequence[float],
    cache: EmbeddingCache,
    k: int = 1,
    threshold: float = float("inf"),
) -> DluqScore:
    """Mean distance to the k nearest cache entries; flag iff above threshold.

    The query is cast to float32 first so that a vector built by the same
    pooling pipeline as the cache scores an exact zero against its own entry.
    """
    if k <= 0:
        raise ValueError("k must be positive")
    if k > len(cache):
        raise KTooLarge(f"k={k} exceeds cache size {len(cache)}")
    dists = _distances(doc_embedding, cache)
    order = np.argsort(dists, kind="stable")[:k]
    distance = float(dists[order].mean())
    return DluqScore(
        distance=distance,
        k_used=k,
        nearest_ids=tuple(cache.doc_ids[i] for i in order),
        verdict=FLAG if distance > threshold else ACCEPT,
    )


def calibrate_threshold(in_scores: Sequence[float], target_fpr: float) -> float:
    """Nearest-rank (1 - target_fpr) quantile of in-distribution scores.

    At most target_fpr of the calibration scores exceed the returned value.
    """
    if len(in_scores) == 0:
        raise EmptyInput("calibration requires at least one in-distribution score")
    if not (0.0 < target_fpr < 1.0):
        raise InvalidFpr(f"target_fpr must be in (0, 1), got {target_fpr}")
    ordered = sorted(in_scores)
    rank = math.ceil((1.0 - target_fpr) * len(ordered))
    rank = min(max(rank, 1), len(ordered))
    return float(ordered[rank - 1])


def leave_one_out_scores(cache: EmbeddingCache, k: int = 1) -> list[float]:
    """Self-score every cache entry against the cache minus itself."""
    if k >= len(cache):
        raise KTooLarge(f"k={k} needs at least k+1 cache entries, have {len(cache)}")
    scores = []
    for i in range(len(cache)):
        dists = _distances(cache.vectors[i], cache)
        dists = np.delete(dists, i)
        order = np.argsort(dists, kind="stable")[:k]
        scores.append(float(dists[order].mean()))
    return scores
