import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from idea.datamodel import AnchorLinkSet, Library, MovieRecord
from idea.errors import ConfigError, DimensionMismatchError, EmptyInputError
from idea.fusion import MissingReport
from idea.ranking import (
    RankCriterion,
    RankModel,
    compute_rank_targets,
    predict_rank,
    rank_missing,
    train_rank_model,
    write_completions,
)


def rated(values, field="rating"):
    return Library("A", tuple(MovieRecord(f"m{i}", **{field: v}) for i, v in enumerate(values)))


def test_quality_targets():
    t = compute_rank_targets(rated([9, 7, 8, 5]), "quality")
    assert [t[f"m{i}"] for i in range(4)] == [0.25, 0.75, 0.5, 1.0]


def test_popularity_uses_comment_count():
    t = compute_rank_targets(rated([3, 100, 10], "comment_count"), RankCriterion("popularity"))
    assert t == {"m1": 1 / 3, "m2": 2 / 3, "m0": 1.0}


def test_single_movie_and_ties():
    assert compute_rank_targets(rated([4.0]), "quality") == {"m0": 1.0}
    t = compute_rank_targets(Library("A", (MovieRecord("x2", rating=7.0), MovieRecord("x1", rating=7.0))), "quality")
    assert t == {"x1": 0.5, "x2": 1.0}


def test_missing_field_excluded():
    lib = Library("A", (MovieRecord("m0", rating=5.0), MovieRecord("m1")))
    assert compute_rank_targets(lib, "quality") == {"m0": 1.0}


def test_empty_library():
    with pytest.raises(EmptyInputError):
        compute_rank_targets(Library("A", ()), "quality")


def test_unknown_criterion():
    with pytest.raises(ConfigError):
        RankCriterion("knowledge_gap")


@settings(max_examples=50, deadline=None)
@given(st.lists(st.floats(0, 10), min_size=1, max_size=30, unique=True))
def test_targets_are_a_bijection_onto_grid(values):
    t = compute_rank_targets(rated(values), "quality")
    n = len(values)
    assert sorted(t.values()) == [(i + 1) / n for i in range(n)]


def test_predict_rank_cases():
    m = RankModel(np.zeros(3), 0.0, "quality", "a", "b")
    assert predict_rank(np.ones(3), m) == 0.5
    m.b = -50.0
    assert predict_rank(np.ones(3), m) < 1e-20
    with pytest.raises(DimensionMismatchError):
        predict_rank(np.ones(4), m)


def test_predict_permutation_invariance():
    rng = np.random.default_rng(0)
    w, y = rng.normal(size=5), rng.random(5)
    perm = rng.permutation(5)
    a = predict_rank(y, RankModel(w, 0.3, "quality", "a", "b"))
    b = predict_rank(y[perm], RankModel(w[perm], 0.3, "quality", "a", "b"))
    assert a == pytest.approx(b, abs=1e-15)


def _aligned(n, d, seed=0):
    rng = np.random.default_rng(seed)
    emb = {f"s{i}": rng.random(d) for i in range(n)}
    return emb, {f"s{i}": f"t{i}" for i in range(n)}


def test_zero_epochs_returns_init():
    emb, al = _aligned(5, 3)
    m = train_rank_model(emb, {t: 0.2 for t in al.values()}, al, epochs=0)
    assert np.all(m.w == 0) and m.b == 0 and predict_rank(emb["s0"], m) == 0.5


def test_constant_targets_converge_to_half():
    emb, al = _aligned(40, 6)
    m = train_rank_model(emb, {t: 0.5 for t in al.values()}, al)
    preds = [predict_rank(y, m) for y in emb.values()]
    assert abs(np.mean(preds) - 0.5) < 1e-2


def test_recovers_known_sigmoid_linear_targets():
    rng = np.random.default_rng(3)
    emb, al = _aligned(200, 8, seed=3)
    w_star, b_star = rng.normal(size=8) * 2, -1.0
    targets = {al[s]: float(1 / (1 + np.exp(-(y @ w_star + b_star)))) for s, y in emb.items()}
    m = train_rank_model(emb, targets, al, lr=2.0, epochs=3000)
    mse = np.mean([(predict_rank(emb[s], m) - targets[al[s]]) ** 2 for s in emb])
    assert mse < 1e-3


def test_anchor_link_set_is_read_a_to_b():
    emb, _ = _aligned(3, 2)
    links = AnchorLinkSet("A", "B", frozenset({("s0", "t0"), ("s1", "t1")}))
    m = train_rank_model(emb, {"t0": 0.1, "t1": 0.9}, links, epochs=5)
    assert len(m.loss_history) == 5


def test_no_overlap_raises():
    emb, al = _aligned(3, 2)
    with pytest.raises(EmptyInputError):
        train_rank_model(emb, {"zz": 0.5}, al)


def test_minibatch_training_is_seeded():
    emb, al = _aligned(30, 4)
    tg = {t: i / 30 for i, t in enumerate(sorted(al.values()))}
    m1 = train_rank_model(emb, tg, al, batch_size=7, epochs=20, seed=5)
    m2 = train_rank_model(emb, tg, al, batch_size=7, epochs=20, seed=5)
    assert np.array_equal(m1.w, m2.w)


def test_rank_missing_orders_ascending(tmp_path):
    w = np.array([1.0])
    models = {"a": RankModel(w, 0.0, "quality", "b", "a"), "b": RankModel(w, 0.0, "quality", "a", "b")}
    # logits chosen so predictions are about 0.1 and 0.7
    latents = {"b": {"n1": np.array([np.log(0.7 / 0.3)]), "n2": np.array([np.log(0.1 / 0.9)])}, "a": {}}
    report = MissingReport(frozenset({"n1", "n2"}), frozenset(), AnchorLinkSet("A", "B"))
    out = rank_missing(report, latents, models)
    assert [c.source_id for c in out["A"]] == ["n2", "n1"] and out["B"] == []
    assert out["A"][0].predicted_rank == pytest.approx(0.1)
    write_completions(out["A"], tmp_path / "c.csv")
    assert (tmp_path / "c.csv").read_text().splitlines()[0] == "destination_library,source_id,predicted_rank,criterion"


def test_rank_missing_empty():
    models = {s: RankModel(np.zeros(2), 0.0, "quality", "a", "b") for s in "ab"}
    out = rank_missing(MissingReport(frozenset(), frozenset(), AnchorLinkSet("A", "B")), {"a": {}, "b": {}}, models)
    assert out == {"A": [], "B": []}


def test_rank_model_json_roundtrip():
    m = RankModel(np.array([0.5, -1.0]), 0.25, "popularity", "b", "a")
    back = RankModel.from_json(m.to_json())
    assert np.array_equal(back.w, m.w) and back.b == m.b and back.criterion == m.criterion
