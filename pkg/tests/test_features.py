import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from idea.datamodel import Library, MovieRecord
from idea.errors import ConfigError, DimensionMismatchError, EmptyInputError
from idea.features import (
    FeatureSpec,
    Vocabulary,
    build_vocabulary,
    export_triplets,
    extract_features,
    feature_matrix,
)

TITLE_ONLY = FeatureSpec(text_fields=("title",), categorical_fields=(), numeric_fields=())


def test_title_only_dimension():
    lib = Library("A", (MovieRecord("m1", title=("a", "b")), MovieRecord("m2", title=("b", "c"))))
    assert build_vocabulary(lib, TITLE_ONLY).dim == 3


def test_numeric_block_appended():
    spec = FeatureSpec(text_fields=("title",), categorical_fields=(), numeric_fields=("rating",))
    lib = Library("A", (MovieRecord("m1", title=("a",), rating=5.0), MovieRecord("m2", title=("b",), rating=9.0)))
    v = build_vocabulary(lib, spec)
    assert v.dim == 3 and v.numeric_index("rating") == 2


def test_min_token_count_prunes():
    spec = FeatureSpec(text_fields=("title",), categorical_fields=(), numeric_fields=(), min_token_count=2)
    lib = Library("A", (MovieRecord("m1", title=("a", "b")), MovieRecord("m2", title=("b",))))
    v = build_vocabulary(lib, spec)
    assert ("title", "a") not in v.index and ("title", "b") in v.index


def test_genre_only_two_dims():
    spec = FeatureSpec(text_fields=(), categorical_fields=("genre",), numeric_fields=())
    lib = Library("A", (MovieRecord("m1", genres=frozenset({"x"})), MovieRecord("m2", genres=frozenset({"x", "y"}))))
    assert build_vocabulary(lib, spec).dim == 2


def test_everything_pruned_raises():
    spec = FeatureSpec(text_fields=("title",), categorical_fields=(), numeric_fields=(), min_token_count=5)
    with pytest.raises(EmptyInputError):
        build_vocabulary(Library("A", (MovieRecord("m1", title=("a",)),)), spec)


def test_empty_spec_rejected():
    with pytest.raises(ConfigError):
        FeatureSpec(text_fields=(), categorical_fields=(), numeric_fields=())


def test_presence_entries():
    lib = Library("A", (MovieRecord("m1", title=("a", "b", "c")),))
    v = build_vocabulary(lib, TITLE_ONLY)
    fv = extract_features(MovieRecord("x", title=("a", "b", "zzz")), v)
    assert fv.entries == {v.index[("title", "a")]: 1.0, v.index[("title", "b")]: 1.0}


def test_rating_midpoint_scaling():
    spec = FeatureSpec(text_fields=(), categorical_fields=(), numeric_fields=("rating",))
    lib = Library("A", (MovieRecord("m1", rating=5.0), MovieRecord("m2", rating=9.0)))
    v = build_vocabulary(lib, spec)
    assert extract_features(MovieRecord("x", rating=7.0), v).entries == {0: 0.5}


def test_degenerate_range_is_half():
    spec = FeatureSpec(text_fields=(), categorical_fields=(), numeric_fields=("year",))
    v = build_vocabulary(Library("A", (MovieRecord("m1", year=2000),)), spec)
    assert extract_features(MovieRecord("m1", year=2000), v).entries == {0: 0.5}


def test_empty_movie_has_no_entries():
    lib = Library("A", (MovieRecord("m1", title=("a",), rating=3.0), MovieRecord("m2", rating=4.0)))
    v = build_vocabulary(lib, FeatureSpec())
    assert len(extract_features(MovieRecord("blank"), v)) == 0


def test_absent_numeric_emits_nothing_but_zero_scaled_is_observed():
    spec = FeatureSpec(text_fields=(), categorical_fields=(), numeric_fields=("rating",))
    v = build_vocabulary(Library("A", (MovieRecord("m1", rating=5.0), MovieRecord("m2", rating=9.0))), spec)
    fv = extract_features(MovieRecord("x", rating=5.0), v)
    assert fv.entries == {0: 0.0} and fv.observed()[0]
    assert not extract_features(MovieRecord("y"), v).observed().any()


def test_spec_mismatch():
    lib = Library("A", (MovieRecord("m1", title=("a",)),))
    v = build_vocabulary(lib, TITLE_ONLY)
    with pytest.raises(DimensionMismatchError):
        extract_features(lib.movies[0], v, FeatureSpec())


def test_vocabulary_json_roundtrip(tmp_path):
    lib = Library("A", (MovieRecord("m1", title=("a",), genres=frozenset({"g"}), rating=2.0),))
    v = build_vocabulary(lib, FeatureSpec())
    v.save(tmp_path / "v.json")
    back = Vocabulary.load(tmp_path / "v.json")
    assert back == v and back.index == v.index


def test_triplet_export(tmp_path):
    X = np.array([[0.0, 1.0], [0.5, 0.0]])
    export_triplets(X, tmp_path / "x.csv")
    lines = (tmp_path / "x.csv").read_text().splitlines()
    assert lines == ["row,col,value", "0,1,1.0", "1,0,0.5"]


tokens = st.lists(st.sampled_from(list("abcdefgh")), max_size=6)


@settings(max_examples=40, deadline=None)
@given(st.lists(st.tuples(tokens, st.floats(0, 10)), min_size=1, max_size=8))
def test_values_in_unit_interval_and_order_independent(rows):
    movies = tuple(MovieRecord(f"m{i}", title=tuple(t), storyline=tuple(t), rating=r) for i, (t, r) in enumerate(rows))
    lib = Library("A", movies)
    if all(not t for t, _ in rows):
        spec = FeatureSpec(text_fields=("title",), numeric_fields=("rating",), categorical_fields=())
    else:
        spec = FeatureSpec()
    v = build_vocabulary(lib, spec)
    X, M = feature_matrix(movies, v)
    assert np.all((X >= 0) & (X <= 1))
    assert np.all(X[~M] == 0)
    # reversing the library order gives the same vocabulary
    assert build_vocabulary(Library("A", movies[::-1]), spec) == v
