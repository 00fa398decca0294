"""Word/character segmentation against a brute-force route oracle."""

import pytest
from hypothesis import given, settings, strategies as st

from bteval.segmentation import (
    Lexicon,
    LexiconError,
    TokenList,
    detect_traditional,
    load_lexicon,
    ngrams,
    route_score,
    segment_chars,
    segment_words,
)


def brute_force_best_route(text: str, lexicon: Lexicon):
    """Enumerate every valid segmentation (entries or single-char fallback),
    maximize summed log-probability, prefer the longer first token on ties."""
    n = len(text)
    best = None

    def walk(i, tokens, score):
        nonlocal best
        if i == n:
            key = (score, tuple(len(t) for t in tokens))
            # lexicographic tie-break on token lengths = longer first token wins
            if best is None or key > best[0]:
                best = (key, list(tokens))
            return
        for j in range(i + 1, n + 1):
            word = text[i:j]
            if j == i + 1 or lexicon.freq(word) > 0:
                lp = (lexicon.log_prob(word) if lexicon.freq(word) > 0
                      else lexicon.floor_log_prob())
                walk(j, tokens + [word], score + lp)

    walk(0, [], 0.0)
    assert best is not None
    return best[1]


def test_worked_example_prefers_whole_word(tiny_lexicon):
    # log(100/200) beats log(50/200) + log(50/200)
    assert segment_words("人工智能", tiny_lexicon).tokens == ("人工智能",)
    assert brute_force_best_route("人工智能", tiny_lexicon) == ["人工智能"]


def test_single_oov_character_falls_back(tiny_lexicon):
    assert segment_words("药", tiny_lexicon).tokens == ("药",)


def test_empty_text(tiny_lexicon):
    assert segment_words("", tiny_lexicon).tokens == ()
    assert segment_chars("").tokens == ()


def test_char_level_examples():
    assert segment_chars("化学 工程").tokens == ("化", "学", "工", "程")
    assert segment_chars("AI药物").tokens == ("A", "I", "药", "物")
    # oracle: scalar values of the string minus whitespace
    text = "AI药物 x"
    assert segment_chars(text).tokens == tuple(c for c in text if not c.isspace())


@pytest.mark.parametrize("seed", range(30))
def test_dp_matches_brute_force_on_short_texts(seed):
    import random

    rng = random.Random(seed)
    alphabet = "甲乙丙丁戊己庚辛"
    words = {}
    for _ in range(rng.randint(2, 10)):
        length = rng.randint(1, 3)
        word = "".join(rng.choice(alphabet) for _ in range(length))
        words[word] = rng.randint(1, 500)
    lexicon = Lexicon(words)
    text = "".join(rng.choice(alphabet) for _ in range(rng.randint(1, 12)))
    dp_tokens = list(segment_words(text, lexicon).tokens)
    oracle_tokens = brute_force_best_route(text, lexicon)
    assert route_score(dp_tokens, lexicon) == pytest.approx(
        route_score(oracle_tokens, lexicon), abs=1e-12
    )
    assert dp_tokens == oracle_tokens  # including the tie-break


@given(st.text(alphabet="化学工程人智能药 \t", min_size=0, max_size=40))
@settings(max_examples=200, deadline=None)
def test_lossless_coverage(text):
    lexicon = Lexicon({"化学": 100, "工程": 80, "人工智能": 50, "智能": 30, "药": 5})
    tokens = segment_words(text, lexicon)
    assert tokens.join() == "".join(text.split())
    chars = segment_chars(text)
    assert len(chars) == sum(1 for c in text if not c.isspace())


@pytest.mark.parametrize("seed", range(20))
def test_adding_entry_never_worsens_route_score(seed):
    # compare both routes under the grown lexicon; the total changes, so
    # scores are only comparable within one lexicon
    import random

    rng = random.Random(1000 + seed)
    alphabet = "甲乙丙丁"
    lexicon = Lexicon({"甲乙": 40, "丙": 10})
    text = "".join(rng.choice(alphabet) for _ in range(rng.randint(2, 8)))
    old_route = segment_words(text, lexicon).tokens
    i = rng.randrange(len(text))
    j = rng.randint(i + 1, min(len(text), i + 3))
    grown = lexicon.with_entry(text[i:j], rng.randint(1, 100))
    new_route = segment_words(text, grown).tokens
    assert route_score(new_route, grown) >= route_score(old_route, grown) - 1e-12


def test_ngrams_examples():
    assert ngrams(["a", "b", "c"], 2) == {("a", "b"): 1, ("b", "c"): 1}
    assert ngrams(["a", "a", "a"], 1) == {("a",): 3}
    assert ngrams(["a", "b"], 3) == {}
    with pytest.raises(ValueError):
        ngrams(["a"], 0)


def test_load_lexicon(tmp_path):
    path = tmp_path / "dict.txt"
    path.write_text("人工智能 100 n\n智能 50\n人工智能 20 v\n", encoding="utf-8")
    lexicon = load_lexicon(path)
    assert lexicon.freq("人工智能") == 120  # duplicate surfaces sum
    assert lexicon.freq("智能") == 50
    assert lexicon.total_frequency == 170
    assert lexicon.is_prefix("人工")


def test_load_lexicon_rejects_bad_lines(tmp_path):
    bad_freq = tmp_path / "bad.txt"
    bad_freq.write_text("智能 -5\n", encoding="utf-8")
    with pytest.raises(LexiconError, match="non-positive"):
        load_lexicon(bad_freq)
    malformed = tmp_path / "malformed.txt"
    malformed.write_text("只有一列\n", encoding="utf-8")
    with pytest.raises(LexiconError, match="line 1"):
        load_lexicon(malformed)


def test_detect_traditional_fixture_strings():
    ratio, flagged = detect_traditional("元素觀點：物質由元素組成")
    assert flagged
    assert ratio > 0.3
    ratio, flagged = detect_traditional("元素观点：物质由元素组成")
    assert ratio == 0.0 and not flagged
    ratio, flagged = detect_traditional("ABC 123")
    assert ratio == 0.0 and not flagged


def test_detect_traditional_threshold():
    table = {"觀": "观"}
    text = "觀" + "点" * 99
    ratio, flagged = detect_traditional(text, table, threshold=0.05)
    assert ratio == pytest.approx(0.01)
    assert not flagged
    _, flagged = detect_traditional(text, table, threshold=0.005)
    assert flagged


def test_token_list_behaves_like_sequence():
    tokens = TokenList(("a", "b"), "word")
    assert list(tokens) == ["a", "b"]
    assert len(tokens) == 2
    assert tokens[0] == "a"
