import itertools
import math
import random

import pytest
from hypothesis import given, settings, strategies as st

from pvguard.errors import (
    DegenerateMarginals,
    EmptyInput,
    EmptyReferences,
    InvalidProbability,
    OneClassOnly,
)
from pvguard.metrics import (
    RaterTable,
    auroc,
    bleu,
    edit_distance,
    per_token_perplexity,
    tokenize_for_bleu,
    weighted_kappa,
    word_error_rate,
)
from pvguard.tluq import token_entropy


class TestBleu:
    def test_identity(self):
        result = bleu("the cat sat on the mat".split(), ["the cat sat on the mat".split()])
        assert result.score == 1.0
        assert result.brevity_penalty == 1.0

    def test_clipping_hand_value(self):
        result = bleu("the the the the".split(), ["the cat".split()])
        assert result.ngram_precisions[0] == 0.25  # clipped 1 of 4
        assert result.score == 0.0  # no bigram overlap

    def test_disjoint_tokens(self):
        assert bleu("a b".split(), ["c d".split()]).score == 0.0

    def test_empty_references(self):
        with pytest.raises(EmptyReferences):
            bleu("a".split(), [])

    def test_empty_hypothesis_flagged(self):
        result = bleu([], ["a b".split()])
        assert result.score == 0.0
        assert result.empty_hypothesis

    def test_brevity_penalty(self):
        # hyp length 2, closest ref length 4: exp(1 - 4/2)
        result = bleu("a b".split(), ["a b c d".split()])
        assert math.isclose(result.brevity_penalty, math.exp(-1.0), rel_tol=1e-12)

    def test_closest_reference_length_breaks_ties_short(self):
        result = bleu("a b c".split(), ["a b".split(), "a b c d".split()])
        # lengths 2 and 4 are equally close to 3; r=2 <= h means no penalty
        assert result.brevity_penalty == 1.0

    def test_short_identity_not_penalized_by_missing_orders(self):
        assert bleu("a b".split(), ["a b".split()]).score == 1.0

    def test_smoothing(self):
        plain = bleu("a b c d".split(), ["a b x y".split()])
        smoothed = bleu("a b c d".split(), ["a b x y".split()], smooth=True)
        assert plain.score == 0.0  # zero trigram precision
        assert smoothed.score > 0.0

    @settings(max_examples=30)
    @given(st.permutations(["r1", "r2", "r3"]))
    def test_reference_permutation_invariance(self, order):
        references = {
            "r1": "the cat sat".split(),
            "r2": "a cat sat down".split(),
            "r3": "the dog sat".split(),
        }
        hyp = "the cat sat down".split()
        baseline = bleu(hyp, [references[k] for k in ("r1", "r2", "r3")])
        permuted = bleu(hyp, [references[k] for k in order])
        assert permuted.score == baseline.score


def brute_force_distance(a, b):
    """Exponential recursion oracle for the edit distance."""
    if not a:
        return len(b)
    if not b:
        return len(a)
    return min(
        brute_force_distance(a[1:], b) + 1,
        brute_force_distance(a, b[1:]) + 1,
        brute_force_distance(a[1:], b[1:]) + (a[0] != b[0]),
    )


class TestWordErrorRate:
    def test_identity(self):
        assert word_error_rate("a b c".split(), "a b c".split()) == 0.0

    def test_substitution_hand_value(self):
        assert word_error_rate(["a", "x", "c"], ["a", "b", "c"]) == pytest.approx(1 / 3)

    def test_single_deletion(self):
        assert word_error_rate([], ["a"]) == 1.0

    def test_empty_reference(self):
        with pytest.raises(EmptyInput):
            word_error_rate(["a"], [])

    def test_dp_matches_recursion_oracle(self):
        rng = random.Random(5)
        for _ in range(200):
            a = [rng.choice("abc") for _ in range(rng.randint(0, 6))]
            b = [rng.choice("abc") for _ in range(rng.randint(1, 6))]
            assert edit_distance(a, b) == brute_force_distance(a, b)

    def test_triangle_inequality(self):
        rng = random.Random(11)
        for _ in range(200):
            seqs = [[rng.choice("ab") for _ in range(rng.randint(0, 5))] for _ in range(3)]
            a, b, c = seqs
            assert edit_distance(a, c) <= edit_distance(a, b) + edit_distance(b, c)


class TestPerplexity:
    def test_certain(self):
        assert per_token_perplexity([1.0, 1.0, 1.0]) == 1.0

    def test_uniform(self):
        assert per_token_perplexity([0.01] * 7) == pytest.approx(100.0)

    def test_two_halves(self):
        assert per_token_perplexity([0.5, 0.5]) == pytest.approx(2.0)

    def test_invalid(self):
        for bad in (0.0, -0.5, 1.5):
            with pytest.raises(InvalidProbability):
                per_token_perplexity([bad])

    def test_empty(self):
        with pytest.raises(EmptyInput):
            per_token_perplexity([])

    def test_equals_exp_entropy_on_uniform_support(self):
        # realized-token probabilities drawn from a uniform distribution over
        # V outcomes: perplexity == exp(entropy)
        for v in (2, 5, 16):
            uniform = [1.0 / v] * v
            entropy = token_entropy(uniform)
            perplexity = per_token_perplexity([1.0 / v] * 10)
            assert perplexity == pytest.approx(math.exp(entropy))


def kappa_oracle(counts):
    """Independent scalar-loop implementation of quadratic-weighted kappa."""
    c = len(counts)
    total = sum(sum(row) for row in counts)
    observed = [[v / total for v in row] for row in counts]
    rows = [sum(row) for row in observed]
    cols = [sum(observed[i][j] for i in range(c)) for j in range(c)]
    num = den = 0.0
    for i in range(c):
        for j in range(c):
            w = ((i - j) / (c - 1)) ** 2
            num += w * observed[i][j]
            den += w * rows[i] * cols[j]
    return 1.0 - num / den


class TestWeightedKappa:
    def test_perfect_agreement(self):
        table = RaterTable((1, 2, 3), ((4, 0, 0), (0, 5, 0), (0, 0, 6)))
        assert weighted_kappa(table) == 1.0

    def test_independent_raters(self):
        table = RaterTable((1, 2), ((1, 1), (1, 1)))
        assert weighted_kappa(table) == 0.0

    def test_three_category_hand_table(self):
        counts = ((2, 1, 0), (1, 2, 1), (0, 1, 2))
        table = RaterTable((1, 2, 3), counts)
        assert weighted_kappa(table) == pytest.approx(kappa_oracle(counts), abs=1e-12)
        assert weighted_kappa(table) == pytest.approx(2 / 3)

    def test_random_tables_match_oracle(self):
        rng = random.Random(3)
        for _ in range(100):
            c = rng.randint(2, 5)
            counts = tuple(tuple(rng.randint(0, 9) for _ in range(c)) for _ in range(c))
            if sum(map(sum, counts)) == 0:
                continue
            table = RaterTable(tuple(range(c)), counts)
            try:
                value = weighted_kappa(table)
            except DegenerateMarginals:
                assert kappa_degenerate(counts)
                continue
            assert value == pytest.approx(kappa_oracle(counts), abs=1e-9)
            assert -1.0 - 1e-9 <= value <= 1.0 + 1e-9

    def test_transpose_invariance(self):
        rng = random.Random(8)
        for _ in range(50):
            c = rng.randint(2, 4)
            counts = [[rng.randint(0, 5) for _ in range(c)] for _ in range(c)]
            transposed = [[counts[j][i] for j in range(c)] for i in range(c)]
            try:
                a = weighted_kappa(RaterTable(tuple(range(c)), counts))
                b = weighted_kappa(RaterTable(tuple(range(c)), transposed))
            except DegenerateMarginals:
                continue
            assert a == pytest.approx(b, abs=1e-12)

    def test_degenerate_marginals(self):
        with pytest.raises(DegenerateMarginals):
            weighted_kappa(RaterTable((1, 2), ((3, 0), (0, 0))))


def kappa_degenerate(counts):
    c = len(counts)
    total = sum(map(sum, counts))
    rows = [sum(row) / total for row in counts]
    cols = [sum(counts[i][j] for i in range(c)) / total for j in range(c)]
    den = sum(((i - j) / (c - 1)) ** 2 * rows[i] * cols[j]
              for i in range(c) for j in range(c))
    return den == 0.0


def auroc_oracle(scores, labels):
    pos = [s for s, l in zip(scores, labels) if l == "pos"]
    neg = [s for s, l in zip(scores, labels) if l == "neg"]
    wins = 0.0
    for p, n in itertools.product(pos, neg):
        if p > n:
            wins += 1.0
        elif p == n:
            wins += 0.5
    return wins / (len(pos) * len(neg))


class TestAuroc:
    def test_perfect_separation(self):
        assert auroc([0.9, 0.8, 0.1, 0.2], ["pos", "pos", "neg", "neg"]) == 1.0

    def test_half_by_enumeration(self):
        scores = [0.8, 0.2, 0.6, 0.4]
        labels = ["pos", "pos", "neg", "neg"]
        assert auroc_oracle(scores, labels) == 0.5
        assert auroc(scores, labels) == 0.5

    def test_all_ties(self):
        assert auroc([1.0, 1.0, 1.0], ["pos", "neg", "neg"]) == 0.5

    def test_one_class_only(self):
        with pytest.raises(OneClassOnly):
            auroc([1.0, 2.0], ["pos", "pos"])

    @settings(max_examples=50)
    @given(st.lists(st.tuples(st.floats(0, 1, allow_nan=False),
                              st.sampled_from(["pos", "neg"])),
                    min_size=2, max_size=20))
    def test_matches_pairwise_enumeration(self, rows):
        scores = [s for s, _ in rows]
        labels = [l for _, l in rows]
        if len(set(labels)) < 2:
            return
        assert auroc(scores, labels) == pytest.approx(
            auroc_oracle(scores, labels), abs=1e-12)

    @settings(max_examples=50)
    @given(st.lists(st.tuples(st.floats(0, 1, allow_nan=False),
                              st.sampled_from(["pos", "neg"])),
                    min_size=2, max_size=15))
    def test_label_flip_antisymmetry(self, rows):
        scores = [s for s, _ in rows]
        labels = [l for _, l in rows]
        if len(set(labels)) < 2:
            return
        flipped = ["pos" if l == "neg" else "neg" for l in labels]
        assert auroc(scores, labels) == pytest.approx(
            1.0 - auroc(scores, flipped), abs=1e-12)


class TestTokenizers:
    def test_plain(self):
        assert tokenize_for_bleu("The Cat  sat.") == ["the", "cat", "sat."]

    def test_intl_splits_punctuation(self):
        assert tokenize_for_bleu("The cat, sat.", "intl") == ["the", "cat", ",", "sat", "."]

    def test_unknown_tag(self):
        with pytest.raises(ValueError):
            tokenize_for_bleu("x", "weird")
