"""Metric implementations against brute-force counting oracles."""

import math
import random
from collections import Counter

import pytest
from hypothesis import given, settings, strategies as st

from bteval.metrics import (
    BleuConfig,
    MetricError,
    ScoringConfig,
    bleu,
    brevity_penalty,
    chrf,
    edit_distance,
    fit_idf,
    modified_precision,
    score_pair,
    semantic_similarity,
    ter,
)
from bteval.segmentation import Lexicon


# ---------------------------------------------------------------- oracles

def oracle_bleu(candidate, reference, weights):
    """Direct-from-definition BLEU: explicit window enumeration and clipping."""
    if not candidate:
        return 0.0
    c, r = len(candidate), len(reference)
    bp = 1.0 if c >= r else math.exp(1 - r / c)
    log_sum = 0.0
    for n, w in enumerate(weights, start=1):
        if w == 0:
            continue
        cand_grams = Counter(tuple(candidate[i:i + n]) for i in range(c - n + 1))
        ref_grams = Counter(tuple(reference[i:i + n]) for i in range(r - n + 1))
        if not cand_grams and not ref_grams:
            continue
        matched = sum(min(k, ref_grams[g]) for g, k in cand_grams.items())
        total = sum(cand_grams.values())
        if total == 0 or matched == 0:
            return 0.0
        log_sum += w * math.log(matched / total)
    return bp * math.exp(log_sum)


def oracle_edit_distance(a, b):
    """Full-matrix Wagner-Fischer."""
    m, n = len(a), len(b)
    d = [[0] * (n + 1) for _ in range(m + 1)]
    for i in range(m + 1):
        d[i][0] = i
    for j in range(n + 1):
        d[0][j] = j
    for i in range(1, m + 1):
        for j in range(1, n + 1):
            d[i][j] = min(
                d[i - 1][j] + 1,
                d[i][j - 1] + 1,
                d[i - 1][j - 1] + (0 if a[i - 1] == b[j - 1] else 1),
            )
    return d[m][n]


def random_pair(rng):
    alphabet = [chr(ord("a") + i) for i in range(rng.randint(1, 10))]
    cand = [rng.choice(alphabet) for _ in range(rng.randint(0, 15))]
    ref = [rng.choice(alphabet) for _ in range(rng.randint(1, 15))]
    return cand, ref


# ---------------------------------------------------------------- BLEU

def test_modified_precision_examples():
    assert modified_precision(["a", "b", "c"], ["a", "b", "c", "d"], 1) == (3, 3)
    assert modified_precision(["a", "a", "a"], ["a"], 1) == (1, 3)
    assert modified_precision(["a", "b"], ["c", "d"], 2) == (0, 1)


def test_brevity_penalty_examples():
    assert brevity_penalty(5, 5) == 1.0
    assert brevity_penalty(3, 4) == pytest.approx(math.exp(1 - 4 / 3), abs=1e-12)
    assert brevity_penalty(0, 4) == 0.0
    with pytest.raises(MetricError):
        brevity_penalty(3, 0)


def test_bleu_worked_example():
    value = bleu(["太阳", "升", "起"], ["太阳", "升", "起", "了"], BleuConfig())
    assert value == pytest.approx(math.exp(1 - 4 / 3), abs=1e-9)


def test_bleu_identity_and_disjoint():
    tokens = ["这", "是", "一", "段", "文字"]
    assert bleu(tokens, tokens, BleuConfig()) == 1.0
    assert bleu(["x", "y"], ["a", "b"], BleuConfig()) == 0.0


def test_bleu_empty_reference_rejected():
    with pytest.raises(MetricError):
        bleu(["a"], [], BleuConfig())


def test_bleu_matches_oracle_on_200_random_pairs():
    rng = random.Random(1234)
    for _ in range(200):
        cand, ref = random_pair(rng)
        for weights in ((0.5, 0.5, 0.0, 0.0), (0.25, 0.25, 0.25, 0.25)):
            mine = bleu(cand, ref, BleuConfig(weights))
            assert mine == pytest.approx(oracle_bleu(cand, ref, weights), abs=1e-12)


def test_bleu_epsilon_smoothing():
    config = BleuConfig((0.5, 0.5, 0, 0), smoothing_epsilon=0.1)
    # unigram match, zero bigram matches: smoothed instead of collapsing to 0
    value = bleu(["a", "x"], ["a", "b"], config)
    expected = math.exp(0.5 * math.log(1 / 2) + 0.5 * math.log(0.1 / 1))
    assert value == pytest.approx(expected, abs=1e-12)
    assert bleu(["a", "x"], ["a", "b"], BleuConfig((0.5, 0.5, 0, 0))) == 0.0


def test_bleu_unif_below_technical_when_higher_orders_weaker():
    rng = random.Random(99)
    checked = 0
    for _ in range(400):
        cand, ref = random_pair(rng)
        if not cand:
            continue
        ps = []
        for n in range(1, 5):
            matched, total = modified_precision(cand, ref, n)
            ps.append(matched / total if total else None)
        if None in ps[:2] or ps[0] in (0, None) or ps[1] in (0, None):
            continue
        p3 = ps[2] if ps[2] is not None else 0.0
        p4 = ps[3] if ps[3] is not None else 0.0
        if p3 <= min(ps[0], ps[1]) and p4 <= min(ps[0], ps[1]):
            technical = bleu(cand, ref, BleuConfig())
            uniform = bleu(cand, ref, BleuConfig((0.25, 0.25, 0.25, 0.25)))
            assert uniform <= technical + 1e-12
            checked += 1
    assert checked > 50


@given(st.data())
@settings(max_examples=150, deadline=None)
def test_monotone_degradation(data):
    alphabet = st.sampled_from(["a", "b", "c", "d"])
    ref = data.draw(st.lists(alphabet, min_size=2, max_size=12))
    cand = list(ref)
    idx = data.draw(st.integers(0, len(cand) - 1))
    before_bleu = bleu(cand, ref, BleuConfig())
    before_chrf = chrf("".join(cand), "".join(ref))
    before_ter = ter(cand, ref)
    cand[idx] = "Z"  # fresh token never in the reference
    assert bleu(cand, ref, BleuConfig()) <= before_bleu + 1e-12
    assert chrf("".join(cand), "".join(ref)) <= before_chrf + 1e-12
    assert ter(cand, ref) >= before_ter - 1e-12


# ---------------------------------------------------------------- CHRF

def test_chrf_examples():
    assert chrf("同一段文字", "同一段文字") == 1.0
    assert chrf("abcd", "wxyz") == 0.0
    assert chrf("abce", "abcd", max_n=2, beta=2.0) == pytest.approx(
        (0.75 + 2 / 3) / 2, abs=1e-9
    )


def test_chrf_strips_whitespace():
    assert chrf("化学 工程", "化学工程") == 1.0


def test_chrf_identity_shorter_than_max_n():
    # orders longer than both sides drop out of the mean
    assert chrf("ab", "ab", max_n=6) == 1.0


def test_chrf_empty_reference():
    with pytest.raises(MetricError):
        chrf("abc", "   ")


# ---------------------------------------------------------------- TER

def test_ter_examples():
    assert ter(["a", "b", "c"], ["a", "b", "c"]) == 0.0
    assert ter(["a", "b", "x", "d", "e"], ["a", "b", "c", "d", "e"]) == pytest.approx(0.2)
    assert ter([], ["a", "b", "c", "d"]) == 1.0


def test_ter_matches_dp_oracle_exactly():
    rng = random.Random(4321)
    for _ in range(200):
        cand, ref = random_pair(rng)
        assert edit_distance(cand, ref) == oracle_edit_distance(cand, ref)
        assert ter(cand, ref) == oracle_edit_distance(cand, ref) / len(ref)


def test_ter_denominator_symmetry():
    rng = random.Random(777)
    for _ in range(50):
        cand, ref = random_pair(rng)
        if not cand:
            continue
        assert ter(cand, ref) * len(ref) == pytest.approx(ter(ref, cand) * len(cand))


# ---------------------------------------------------------------- TF-IDF

def test_fit_idf_examples():
    model = fit_idf([["a", "b"], ["c", "d"]])
    assert model.document_frequency == {"a": 1, "b": 1, "c": 1, "d": 1}
    everywhere = fit_idf([["t"], ["t", "x"], ["t", "y"]])
    assert everywhere.idf("t") == pytest.approx(1.0)
    four_docs = fit_idf([["a"], ["a", "b"], ["c"], ["d"]])
    assert four_docs.idf("a") == pytest.approx(math.log(5 / 3) + 1, abs=1e-9)


def test_fit_idf_requires_two_documents():
    with pytest.raises(MetricError):
        fit_idf([["only"]])


def test_semantic_similarity_examples():
    idf = fit_idf([["a", "b"], ["a", "c"]])
    assert semantic_similarity(["a", "b"], ["a", "b"], idf) == 1.0
    assert semantic_similarity(["a", "b"], ["x", "y"], idf) == 0.0


def test_semantic_similarity_uniform_idf_halfway():
    # hand-computed 3-dimensional cosine with equal idf weights
    uniform = fit_idf([["a", "b", "c"], ["a", "b", "c"]])
    assert uniform.idf("a") == uniform.idf("b") == uniform.idf("c")
    value = semantic_similarity(["a", "b"], ["a", "c"], uniform)
    assert value == pytest.approx(0.5, abs=1e-12)


# ---------------------------------------------------------------- score_pair

def test_score_pair_identity_extremes(hua_yao_original):
    vector = score_pair(hua_yao_original, hua_yao_original)
    assert (vector.bleu, vector.bleu_unif, vector.chrf, vector.ter,
            vector.semantic_similarity) == (1.0, 1.0, 1.0, 0.0, 1.0)


@given(st.text(alphabet="化学工程元素物质药品研究分析", min_size=1, max_size=20))
@settings(max_examples=100, deadline=None)
def test_score_pair_identity_property(text):
    vector = score_pair(text, text)
    assert vector.bleu == 1.0
    assert vector.bleu_unif == 1.0
    assert vector.chrf == 1.0
    assert vector.ter == 0.0
    assert vector.semantic_similarity == 1.0


def test_score_pair_ranges():
    rng = random.Random(31)
    lexicon = Lexicon({"化学": 10, "工程": 10, "研究": 5})
    vocab = "化学工程研究药品分析实验"
    for _ in range(50):
        a = "".join(rng.choice(vocab) for _ in range(rng.randint(1, 18)))
        b = "".join(rng.choice(vocab) for _ in range(rng.randint(1, 18)))
        v = score_pair(a, b, lexicon)
        assert 0.0 <= v.bleu <= 1.0
        assert 0.0 <= v.bleu_unif <= 1.0
        assert 0.0 <= v.chrf <= 1.0
        assert 0.0 <= v.semantic_similarity <= 1.0
        assert v.ter >= 0.0


def test_score_pair_rejects_empty_original():
    with pytest.raises(MetricError):
        score_pair("   ", "something")


def test_scoring_config_round_trip():
    config = ScoringConfig(chrf_max_n=4, smoothing_epsilon=0.01)
    assert ScoringConfig.from_dict(config.as_dict()) == config


def test_bleu_config_validation():
    with pytest.raises(MetricError):
        BleuConfig((0.5, 0.5))  # not 4 weights
    with pytest.raises(MetricError):
        BleuConfig((0.5, 0.5, 0.5, 0.5))  # sum != 1
    with pytest.raises(MetricError):
        BleuConfig((-0.5, 1.5, 0.0, 0.0))


def test_ter_upper_bound():
    rng = random.Random(6)
    for _ in range(100):
        cand, ref = random_pair(rng)
        assert ter(cand, ref) <= max(1.0, len(cand) / len(ref)) + 1e-12
