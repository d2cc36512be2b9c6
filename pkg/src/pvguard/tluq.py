"""Token-level uncertainty: entropies, percentile-banded flags, case scores.

Flagging is rank-based (any order-preserving transform of the entropies gives
the same flags). Levels are exclusive and nested by construction: a token is
reported only at the highest band it qualifies for, L3 being the most
uncertain 1% of the document's tokens.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from typing import Mapping, Optional, Sequence

import numpy as np

from .errors import (
    EmptyInput,
    EmptyStratum,
    InvalidDistribution,
    LengthMismatch,
)

FULL = "full"
TOPK = "topk"

L1, L2, L3 = "L1", "L2", "L3"
# (level, fraction of tokens covered), most uncertain first
_BANDS = ((L3, 0.01), (L2, 0.05), (L1, 0.10))

_SUM_TOLERANCE = 1e-6


@dataclass(frozen=True)
class TokenRecord:
    """One generated token with its predictive distribution.

    distribution is either the full probability vector over the vocabulary or
    a renormalized top-k list of (token, probability) pairs, per
    distribution_kind.
    """

    token_text: str
    byte_span: tuple[int, int]
    distribution: tuple
    distribution_kind: str = FULL

    def __post_init__(self):
        if self.distribution_kind not in (FULL, TOPK):
            raise InvalidDistribution(f"unknown distribution_kind {self.distribution_kind!r}")
        probs = self.probabilities
        if any(p < 0 for p in probs):
            raise InvalidDistribution("negative probability mass")
        if abs(sum(probs) - 1.0) > _SUM_TOLERANCE:
            raise InvalidDistribution(f"probabilities sum to {sum(probs)!r}, not 1")

    @property
    def probabilities(self) -> tuple[float, ...]:
        if self.distribution_kind == TOPK:
            return tuple(float(p) for _, p in self.distribution)
        return tuple(float(p) for p in self.distribution)


def token_entropy(distribution: Sequence[float]) -> float:
    """Shannon entropy in nats, summed over nonzero entries."""
    p = np.asarray(list(distribution), dtype=np.float64)
    if (p < 0).any():
        raise InvalidDistribution("negative probability mass")
    if abs(float(p.sum()) - 1.0) > _SUM_TOLERANCE:
        raise InvalidDistribution(f"probabilities sum to {float(p.sum())!r}, not 1")
    p = p[p > 0]
    return float(-(p * np.log(p)).sum())


def case_entropy_score(entropies: Sequence[float]) -> float:
    """Arithmetic mean of token entropies; 0.0 for an empty document."""
    if len(entropies) == 0:
        return 0.0
    return float(np.mean(np.asarray(entropies, dtype=np.float64)))


def band_thresholds(entropies: Sequence[float]) -> tuple[float, float, float]:
    """Per-document thresholds (t10, t5, t1): the k-th largest entropy with
    k = ceil(fraction * N) for the 10%, 5%, and 1% most entropic tokens."""
    if len(entropies) == 0:
        raise EmptyInput("cannot compute percentile bands of an empty list")
    ordered = sorted(entropies, reverse=True)
    n = len(ordered)
    out = []
    for _, fraction in (_BANDS[2], _BANDS[1], _BANDS[0]):  # L1, L2, L3 order
        k = min(n, math.ceil(fraction * n))
        out.append(float(ordered[k - 1]))
    return out[0], out[1], out[2]


def _assign_levels(entropies: Sequence[float],
                   thresholds: tuple[float, float, float]) -> list[Optional[str]]:
    t10, t5, t1 = thresholds
    levels: list[Optional[str]] = []
    for e in entropies:
        if e >= t1:
            levels.append(L3)
        elif e >= t5:
            levels.append(L2)
        elif e >= t10:
            levels.append(L1)
        else:
            levels.append(None)
    return levels


def flag_spans(
    entropies: Sequence[float],
    spans: Sequence[tuple[int, int]],
    thresholds: Optional[tuple[float, float, float]] = None,
) -> list[tuple[tuple[int, int], str]]:
    """Flag spans in three nested intensity bands, highest band wins.

    Thresholds default to the per-document percentile rule; passing fixed
    (t10, t5, t1) values selects global-threshold mode.
    """
    if len(entropies) == 0:
        raise EmptyInput("flag_spans requires at least one token")
    if len(entropies) != len(spans):
        raise LengthMismatch(f"{len(entropies)} entropies vs {len(spans)} spans")
    if thresholds is None:
        thresholds = band_thresholds(entropies)
    levels = _assign_levels(entropies, thresholds)
    return [(tuple(span), level) for span, level in zip(spans, levels) if level is not None]


@dataclass(frozen=True)
class TluqAnnotation:
    token_entropies: tuple[float, ...]
    case_entropy: float
    flagged_spans: tuple[tuple[tuple[int, int], str], ...]
    truncated: bool = False  # any token distribution was top-k renormalized
    empty: bool = False

    def to_dict(self) -> dict:
        return {
            "token_entropies": list(self.token_entropies),
            "case_entropy": self.case_entropy,
            "flagged_spans": [
                {"start": span[0], "end": span[1], "level": level}
                for span, level in self.flagged_spans
            ],
            "truncated": self.truncated,
            "empty": self.empty,
        }


def annotate(
    tokens: Sequence[TokenRecord],
    global_thresholds: Optional[tuple[float, float, float]] = None,
) -> TluqAnnotation:
    """Full token-level annotation of one generated document."""
    if not tokens:
        return TluqAnnotation(token_entropies=(), case_entropy=0.0,
                              flagged_spans=(), truncated=False, empty=True)
    entropies = [token_entropy(t.probabilities) for t in tokens]
    spans = [t.byte_span for t in tokens]
    flagged = flag_spans(entropies, spans, thresholds=global_thresholds)
    return TluqAnnotation(
        token_entropies=tuple(entropies),
        case_entropy=case_entropy_score(entropies),
        flagged_spans=tuple(flagged),
        truncated=any(t.distribution_kind == TOPK for t in tokens),
        empty=False,
    )


# --- stratified comparison (Mann-Whitney U) -----------------------------------

def _u_statistic(a: Sequence[float], b: Sequence[float]) -> float:
    """U for sample a against b; tied pairs count one half."""
    pooled = np.concatenate([np.asarray(a, dtype=np.float64),
                             np.asarray(b, dtype=np.float64)])
    order = pooled.argsort(kind="stable")
    ranks = np.empty(len(pooled), dtype=np.float64)
    sorted_vals = pooled[order]
    i = 0
    while i < len(sorted_vals):
        j = i
        while j < len(sorted_vals) and sorted_vals[j] == sorted_vals[i]:
            j += 1
        ranks[order[i:j]] = (i + j + 1) / 2.0  # midranks, 1-based
        i = j
    n1 = len(a)
    r1 = float(ranks[:n1].sum())
    return r1 - n1 * (n1 + 1) / 2.0


def _exact_u_distribution(n1: int, n2: int) -> list[int]:
    """Counts of arrangements per U value for tie-free samples.

    f(i, j, u) = f(i-1, j, u - j) + f(i, j-1, u), computed bottom-up.
    """
    max_u = n1 * n2
    # table[j][u] = number of arrangements of i items of A among j items of B
    prev = [[0] * (max_u + 1) for _ in range(n2 + 1)]
    for j in range(n2 + 1):
        prev[j][0] = 1  # zero A-items: only U=0
    for _ in range(1, n1 + 1):
        cur = [[0] * (max_u + 1) for _ in range(n2 + 1)]
        for j in range(n2 + 1):
            for u in range(max_u + 1):
                val = prev[j][u - j] if u >= j else 0
                if j > 0:
                    val += cur[j - 1][u]
                cur[j][u] = val
        prev = cur
    return prev[n2]


def _exact_p_no_ties(u_obs: float, n1: int, n2: int) -> float:
    counts = _exact_u_distribution(n1, n2)
    total = sum(counts)
    mu = n1 * n2 / 2.0
    dev = abs(u_obs - mu)
    tail = sum(c for u, c in enumerate(counts) if abs(u - mu) >= dev - 1e-12)
    return tail / total


def _exact_p_with_ties(a: Sequence[float], b: Sequence[float], u_obs: float) -> float:
    pooled = list(a) + list(b)
    n1 = len(a)
    mu = n1 * len(b) / 2.0
    dev = abs(u_obs - mu)
    hits = 0
    total = 0
    indices = range(len(pooled))
    for combo in itertools.combinations(indices, n1):
        chosen = set(combo)
        xs = [pooled[i] for i in combo]
        ys = [pooled[i] for i in indices if i not in chosen]
        u = _u_statistic(xs, ys)
        total += 1
        if abs(u - mu) >= dev - 1e-12:
            hits += 1
    return hits / total


def _asymptotic_p(a: Sequence[float], b: Sequence[float], u_obs: float) -> float:
    n1, n2 = len(a), len(b)
    n = n1 + n2
    pooled = sorted(list(a) + list(b))
    tie_term = 0.0
    i = 0
    while i < n:
        j = i
        while j < n and pooled[j] == pooled[i]:
            j += 1
        t = j - i
        tie_term += t ** 3 - t
        i = j
    sigma_sq = n1 * n2 / 12.0 * ((n + 1) - tie_term / (n * (n - 1)))
    if sigma_sq <= 0:
        return 1.0  # all observations identical
    mu = n1 * n2 / 2.0
    z = max(0.0, abs(u_obs - mu) - 0.5) / math.sqrt(sigma_sq)  # continuity-corrected
    return min(1.0, math.erfc(z / math.sqrt(2.0)))


EXACT_MAX_COMBINED_N = 12


@dataclass(frozen=True)
class StratumComparison:
    pair: tuple[str, str]
    u_statistic: float
    raw_p: float
    adjusted_p: float
    method: str  # exact | asymptotic

    def to_dict(self) -> dict:
        return {
            "pair": list(self.pair),
            "u_statistic": self.u_statistic,
            "raw_p": self.raw_p,
            "adjusted_p": self.adjusted_p,
            "method": self.method,
        }


def mannwhitney_p(a: Sequence[float], b: Sequence[float]) -> tuple[float, float, str]:
    """Two-sided Mann-Whitney U test of a against b: (U, p, method).

    Exact null distribution for combined n <= 12 (enumeration when ties are
    present), tie- and continuity-corrected normal approximation above.
    """
    if len(a) == 0 or len(b) == 0:
        raise EmptyStratum("both samples must be non-empty")
    u_obs = _u_statistic(a, b)
    if len(a) + len(b) <= EXACT_MAX_COMBINED_N:
        if len(set(list(a) + list(b))) == len(a) + len(b):
            return u_obs, _exact_p_no_ties(u_obs, len(a), len(b)), "exact"
        return u_obs, _exact_p_with_ties(a, b, u_obs), "exact"
    return u_obs, _asymptotic_p(a, b, u_obs), "asymptotic"


def compare_strata(
    scores_by_stratum: Mapping[str, Sequence[float]],
    n_trials: int,
) -> list[StratumComparison]:
    """Pairwise two-sided Mann-Whitney tests with Bonferroni adjustment."""
    if n_trials <= 0:
        raise ValueError("n_trials must be positive")
    for label, scores in scores_by_stratum.items():
        if len(scores) == 0:
            raise EmptyStratum(f"stratum {label!r} has no observations")
    labels = sorted(scores_by_stratum)
    out = []
    for left, right in itertools.combinations(labels, 2):
        u_obs, raw_p, method = mannwhitney_p(scores_by_stratum[left],
                                             scores_by_stratum[right])
        out.append(StratumComparison(
            pair=(left, right),
            u_statistic=u_obs,
            raw_p=raw_p,
            adjusted_p=min(1.0, raw_p * n_trials),
            method=method,
        ))
    return out
