import dataclasses

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from idea.baselines import (
    exact_match,
    jaccard_similarity,
    load_dictionary,
    save_dictionary,
    similarity_scores,
    translate_tokens,
)
from idea.datamodel import Library, MovieRecord
from idea.errors import ConfigError, ParseError
from idea.synthgen import SynthConfig, TranslationDictionary, generate_pair

D = TranslationDictionary({"a": "x", "b": "y", "c": "z"})


def titled(lib_id, rows):
    return Library(lib_id, tuple(MovieRecord(i, title=tuple(t)) for i, t in rows))


def test_translate_tokens():
    assert translate_tokens(["a", "b"], D) == (frozenset({"x", "y"}), 0)
    assert translate_tokens(["a", "q"], D) == (frozenset({"x"}), 1)
    assert translate_tokens([], D) == (frozenset(), 0)


def test_jaccard_cases():
    assert jaccard_similarity({"a", "b"}, {"b", "c"}) == pytest.approx(1 / 3)
    assert jaccard_similarity({"a"}, {"a"}) == 1.0
    assert jaccard_similarity({"a"}, {"b"}) == 0.0
    assert jaccard_similarity(set(), set()) == 0.0


sets = st.frozensets(st.sampled_from("abcdefg"), max_size=5)


@settings(max_examples=80, deadline=None)
@given(sets, sets)
def test_jaccard_symmetric_and_one_iff_equal(s, t):
    j = jaccard_similarity(s, t)
    assert j == jaccard_similarity(t, s) and 0.0 <= j <= 1.0
    assert (j == 1.0) == (s == t and len(s) > 0)


def test_exact_match_links_and_exactness():
    a = titled("A", [("m1", "ab"), ("m2", "c"), ("m3", "bc")])
    b = titled("B", [("n1", "yx"), ("n2", "z"), ("n3", "yzx")])
    links = exact_match(a, b, D)
    assert set(links) == {("m1", "n1"), ("m2", "n2")}  # m3 differs from n3 by one token


def test_exact_match_refuses_ambiguity():
    a = titled("A", [("m1", "ab")])
    b = titled("B", [("n1", "xy"), ("n2", "yx")])
    assert len(exact_match(a, b, D)) == 0


def test_exact_match_b_to_a_direction():
    a = titled("A", [("m1", "ab"), ("m2", "ac")])
    b = titled("B", [("n1", "xy"), ("n2", "q")])
    assert set(exact_match(a, b, D, "b_to_a")) == {("m1", "n1")}
    with pytest.raises(ConfigError):
        exact_match(a, b, D, "sideways")


def test_noise_free_synthetic_recovers_everything():
    cfg = SynthConfig(n_movies=80, title_noise=0.0, storyline_length=5, n_comments=1)
    a, b, links, d = generate_pair(cfg)
    for direction in ("a_to_b", "b_to_a"):
        assert exact_match(a, b, d, direction) == links


def test_similarity_scores():
    a = titled("A", [("m1", "ab"), ("m2", "c")])
    b = titled("B", [("n1", "xy"), ("n2", "yz")])
    scores = {(s.id_a, s.id_b): s for s in similarity_scores(a, b, D)}
    assert len(scores) == 4
    assert scores[("m1", "n1")].distance == 0.0
    assert 1.0 - scores[("m1", "n2")].distance == pytest.approx(1 / 3)
    # score orders pairs as the similarity does
    assert scores[("m1", "n1")].score > scores[("m1", "n2")].score > scores[("m2", "n1")].score


def test_noise_free_true_links_score_one():
    cfg = SynthConfig(n_movies=40, title_noise=0.0, storyline_length=5, n_comments=1)
    a, b, links, d = generate_pair(cfg)
    s = similarity_scores(a, b, d, pairs=list(links))
    assert all(1.0 - p.distance == 1.0 for p in s)


def test_dictionary_tsv_roundtrip(tmp_path):
    save_dictionary(D, tmp_path / "d.tsv")
    assert load_dictionary(tmp_path / "d.tsv") == D
    (tmp_path / "bad.tsv").write_text("a\tx\nb\n")
    with pytest.raises(ParseError):
        load_dictionary(tmp_path / "bad.tsv")


def test_dictionary_rejects_non_injective(tmp_path):
    (tmp_path / "d.tsv").write_text("a\tx\nb\tx\n")
    with pytest.raises(ParseError):
        load_dictionary(tmp_path / "d.tsv")
