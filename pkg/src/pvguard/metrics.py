"""Translation and agreement metrics used to evaluate the pipeline.

All functions are pure and stateless. BLEU and WER operate on token lists;
the helpers at the bottom provide the two supported tokenization conventions.
"""

from __future__ import annotations

import math
import re
from collections import Counter
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import (
    DegenerateMarginals,
    EmptyInput,
    EmptyReferences,
    InvalidProbability,
    OneClassOnly,
)

from .lexicon import normalize


@dataclass(frozen=True)
class BleuResult:
    score: float  # in [0, 1]
    ngram_precisions: tuple[float, float, float, float]
    brevity_penalty: float
    tokenizer_tag: str
    empty_hypothesis: bool = False

    def to_dict(self) -> dict:
        return {
            "score": self.score,
            "ngram_precisions": list(self.ngram_precisions),
            "brevity_penalty": self.brevity_penalty,
            "tokenizer_tag": self.tokenizer_tag,
            "empty_hypothesis": self.empty_hypothesis,
        }


def _ngrams(tokens: Sequence[str], n: int) -> Counter:
    return Counter(tuple(tokens[i:i + n]) for i in range(len(tokens) - n + 1))


def bleu(
    hypothesis: Sequence[str],
    references: Sequence[Sequence[str]],
    max_n: int = 4,
    smooth: bool = False,
    tokenizer_tag: str = "plain",
) -> BleuResult:
    """Sentence BLEU with clipped modified n-gram precision.

    The brevity penalty uses the reference length closest to the hypothesis
    length (ties to the shorter). Orders longer than the hypothesis are
    dropped from the geometric mean, so identity scores 1.0 at any length.
    With smooth=True every order gets add-one smoothing; otherwise a zero
    precision zeroes the score.
    """
    references = [list(r) for r in references]
    if not references:
        raise EmptyReferences("bleu requires at least one reference")
    hypothesis = list(hypothesis)
    h = len(hypothesis)
    if h == 0:
        return BleuResult(0.0, (0.0,) * max_n, 1.0, tokenizer_tag, empty_hypothesis=True)

    r = min((len(ref) for ref in references), key=lambda L: (abs(L - h), L))
    brevity = math.exp(1.0 - r / h) if h <= r else 1.0

    precisions = []
    for n in range(1, max_n + 1):
        hyp_counts = _ngrams(hypothesis, n)
        total = sum(hyp_counts.values())
        if total == 0:
            precisions.append(0.0)
            continue
        clip = Counter()
        for ref in references:
            for gram, count in _ngrams(ref, n).items():
                clip[gram] = max(clip[gram], count)
        matched = sum(min(count, clip[gram]) for gram, count in hyp_counts.items())
        if smooth:
            precisions.append((matched + 1) / (total + 1))
        else:
            precisions.append(matched / total)

    effective = min(max_n, h)
    used = precisions[:effective]
    if any(p == 0.0 for p in used):
        score = 0.0
    else:
        score = brevity * math.exp(sum(math.log(p) for p in used) / len(used))
    padded = tuple(precisions) + (0.0,) * (max_n - len(precisions))
    return BleuResult(score, padded[:4] if max_n >= 4 else padded,
                      brevity, tokenizer_tag)


def edit_distance(a: Sequence[str], b: Sequence[str]) -> int:
    """Levenshtein distance with unit costs."""
    prev = list(range(len(b) + 1))
    for i, x in enumerate(a, start=1):
        cur = [i] + [0] * len(b)
        for j, y in enumerate(b, start=1):
            cur[j] = min(prev[j] + 1, cur[j - 1] + 1, prev[j - 1] + (x != y))
        prev = cur
    return prev[-1]


def word_error_rate(hypothesis: Sequence[str], reference: Sequence[str]) -> float:
    """Edit distance divided by reference length."""
    reference = list(reference)
    if not reference:
        raise EmptyInput("word_error_rate requires a non-empty reference")
    return edit_distance(list(hypothesis), reference) / len(reference)


def per_token_perplexity(token_probs: Sequence[float]) -> float:
    """exp of the mean negative log probability of the realized tokens."""
    probs = list(token_probs)
    if not probs:
        raise EmptyInput("per_token_perplexity requires at least one probability")
    for p in probs:
        if not (0.0 < p <= 1.0):
            raise InvalidProbability(f"probability {p!r} outside (0, 1]")
    return float(math.exp(-sum(math.log(p) for p in probs) / len(probs)))


@dataclass(frozen=True)
class RaterTable:
    """c x c contingency table: rows rater 1, columns rater 2."""

    categories: tuple
    counts: tuple[tuple[int, ...], ...]

    def __post_init__(self):
        c = len(self.categories)
        object.__setattr__(self, "categories", tuple(self.categories))
        object.__setattr__(self, "counts", tuple(tuple(row) for row in self.counts))
        if c < 2:
            raise ValueError("RaterTable needs at least 2 categories")
        if len(self.counts) != c or any(len(row) != c for row in self.counts):
            raise ValueError(f"counts must be a {c}x{c} matrix")
        if any(v < 0 for row in self.counts for v in row):
            raise ValueError("counts must be non-negative")
        if sum(v for row in self.counts for v in row) < 1:
            raise ValueError("total count must be >= 1")


def weighted_kappa(table: RaterTable, weights: str = "quadratic") -> float:
    """Cohen's kappa with quadratic disagreement weights."""
    if weights != "quadratic":
        raise ValueError(f"unsupported weights {weights!r}")
    counts = np.asarray(table.counts, dtype=np.float64)
    c = counts.shape[0]
    total = counts.sum()
    observed = counts / total
    idx = np.arange(c, dtype=np.float64)
    w = ((idx[:, None] - idx[None, :]) / (c - 1)) ** 2
    expected = np.outer(observed.sum(axis=1), observed.sum(axis=0))
    expected_disagreement = float((w * expected).sum())
    if expected_disagreement == 0.0:
        raise DegenerateMarginals("expected weighted disagreement is zero")
    observed_disagreement = float((w * observed).sum())
    return 1.0 - observed_disagreement / expected_disagreement


def auroc(scores: Sequence[float], labels: Sequence[str]) -> float:
    """Probability a random positive outscores a random negative, ties 1/2.

    Labels are "pos"/"neg" strings (or anything truthy under `label == "pos"`).
    """
    scores = np.asarray(list(scores), dtype=np.float64)
    is_pos = np.asarray([label == "pos" for label in labels], dtype=bool)
    if len(scores) != len(is_pos):
        raise ValueError("scores and labels must have the same length")
    n_pos = int(is_pos.sum())
    n_neg = len(is_pos) - n_pos
    if n_pos == 0 or n_neg == 0:
        raise OneClassOnly("auroc requires at least one positive and one negative")
    order = scores.argsort(kind="stable")
    ranks = np.empty(len(scores), dtype=np.float64)
    sorted_scores = scores[order]
    i = 0
    while i < len(sorted_scores):
        j = i
        while j < len(sorted_scores) and sorted_scores[j] == sorted_scores[i]:
            j += 1
        ranks[order[i:j]] = (i + j + 1) / 2.0
        i = j
    pos_rank_sum = float(ranks[is_pos].sum())
    u = pos_rank_sum - n_pos * (n_pos + 1) / 2.0
    return u / (n_pos * n_neg)


# --- tokenizers -----------------------------------------------------------------

_INTL_RE = re.compile(r"\w+|[^\w\s]", re.UNICODE)


def tokenize_for_bleu(text: str, tag: str = "plain") -> list[str]:
    """"plain": whitespace split after normalization. "intl": additionally
    split punctuation into its own tokens (the standardized convention)."""
    norm = normalize(text)
    if tag == "plain":
        return norm.split()
    if tag == "intl":
        return _INTL_RE.findall(norm)
    raise ValueError(f"unknown tokenizer_tag {tag!r}")
