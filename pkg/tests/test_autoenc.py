import dataclasses
import json

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from idea.autoenc import (
    AutoencoderParams,
    HyperParams,
    SideFeatures,
    decode,
    encode,
    fusion_loss,
    gradients,
    init_params,
    load_checkpoint,
    loss_and_gradients,
    make_batch,
    reconstruction_loss,
    regularizer,
    save_checkpoint,
    sigmoid,
    total_loss,
    train,
)
from idea.datamodel import LabeledPair
from idea.errors import ConfigError, DimensionMismatchError, DivergenceError, InputError

from oracles import finite_difference, max_relative_error, random_gradient_case


def tiny_problem(n=12, d=10, seed=0):
    rng = np.random.default_rng(seed)
    X = (rng.random((n, d)) < 0.4).astype(float)
    fa = SideFeatures([f"a{i}" for i in range(n)], X, X != 0)
    Xb = X[:, ::-1].copy()
    fb = SideFeatures([f"b{i}" for i in range(n)], Xb, Xb != 0)
    pairs = [LabeledPair(f"a{i}", f"b{i}", 1) for i in range(n)]
    pairs += [LabeledPair(f"a{i}", f"b{(i + 1) % n}", -1) for i in range(n)]
    return fa, fb, pairs


def test_init_shapes_and_zero_biases():
    hp = HyperParams()
    p = init_params(1000, 800, hp)
    assert [W.shape for W in p.a.enc_W] == [(256, 1000), (128, 256)]
    assert [W.shape for W in p.a.dec_W] == [(256, 128), (1000, 256)]
    assert p.b.dec_W[-1].shape == (800, 256)
    assert all(np.all(b == 0) for b in p.a.enc_b + p.a.dec_b + p.b.enc_b + p.b.dec_b)


def test_init_glorot_bounds_and_determinism():
    hp = HyperParams(layer_dims=(16, 8))
    p, q = init_params(40, 30, hp), init_params(40, 30, hp)
    for W, V in zip(p.arrays(), q.arrays()):
        assert np.array_equal(W, V)
    W = p.a.enc_W[0]
    assert np.max(np.abs(W)) <= np.sqrt(6 / (16 + 40))


def test_sigmoid_range_and_no_nan():
    z = np.array([-1e4, -30, 0, 30, 1e4])
    s = sigmoid(z)
    assert np.all(np.isfinite(s)) and s[2] == 0.5 and np.all(np.diff(s) >= 0)


def test_latents_bounded():
    p = init_params(20, 20, HyperParams(layer_dims=(8, 4)))
    y = encode(np.random.default_rng(0).random((5, 20)) * 100, p, "a")
    assert np.all((y >= 0) & (y <= 1)) and y.shape == (5, 4)


def test_encode_dimension_mismatch():
    p = init_params(20, 20, HyperParams(layer_dims=(8, 4)))
    with pytest.raises(DimensionMismatchError):
        encode(np.zeros(19), p, "a")
    with pytest.raises(DimensionMismatchError):
        decode(np.zeros(3), p, "b")


def test_reconstruction_identities():
    rng = np.random.default_rng(1)
    x = (rng.random(30) < 0.3).astype(float)
    assert reconstruction_loss(x, x, 1000.0) == 0.0
    xh = rng.random(30)
    assert reconstruction_loss(x, xh, 1.0) == pytest.approx(np.sum((xh - x) ** 2), abs=1e-12)


def test_reconstruction_weights_hand_value():
    # observed entry error 0.5 weighted by gamma=10, unobserved error 0.2 weighted by 1
    assert reconstruction_loss([1.0, 0.0], [0.5, 0.2], 10.0) == pytest.approx(25.0 + 0.04, abs=1e-12)


def test_fusion_sign_and_zero_cases():
    a, b = np.array([0.0, 0.0]), np.array([0.3, 0.4])
    assert fusion_loss(a, a, 1) == 0.0
    assert fusion_loss(a, b, 1) == pytest.approx(0.25, abs=1e-12)
    assert fusion_loss(a, b, -1) == pytest.approx(-0.25, abs=1e-12)
    assert fusion_loss(a, b, -1, margin=1.0) == pytest.approx(0.75, abs=1e-12)
    assert fusion_loss(a, b * 10, -1, margin=1.0) == 0.0


def test_regularizer_hand_value():
    p = init_params(3, 3, HyperParams(layer_dims=(2,)))
    for W in p.a.enc_W + p.a.dec_W + p.b.enc_W + p.b.dec_W:
        W[...] = 0.0
    p.a.enc_W[0][0, 0] = 2.0
    p.b.dec_W[0][1, 1] = -3.0
    p.a.enc_b[0][0] = 100.0  # biases are not regularized
    assert regularizer(p) == 13.0


def _batch(seed=0, gamma=10.0, alpha=10.0, beta=0.01):
    rng = np.random.default_rng(seed)
    hp, params, batch = random_gradient_case(rng, gamma)
    return dataclasses.replace(hp, alpha=alpha, beta=beta), params, batch


def test_regularizer_gradient_is_2_beta_w():
    hp, params, batch = _batch()
    hp0 = dataclasses.replace(hp, beta=0.0)
    g1, g0 = gradients(batch, params, hp), gradients(batch, params, hp0)
    for W, a, b in zip(params.a.enc_W, g1.a.enc_W, g0.a.enc_W):
        np.testing.assert_allclose(a - b, 2 * hp.beta * W, atol=1e-12)


def test_zero_alpha_removes_fusion_gradient():
    hp, params, batch = _batch(alpha=0.0)
    flipped = dataclasses.replace(batch, labels=-batch.labels)
    for g, h in zip(gradients(batch, params, hp).arrays(), gradients(flipped, params, hp).arrays()):
        np.testing.assert_array_equal(g, h)


@pytest.mark.parametrize("gamma", [1.0, 10.0])
@pytest.mark.parametrize("seed", [0, 1, 2])
def test_finite_difference_gradients(seed, gamma):
    hp, params, batch = _batch(seed, gamma)
    _, g = loss_and_gradients(batch, params, hp)
    assert max_relative_error(g.arrays(), finite_difference(batch, params, hp)) < 1e-4


def test_margin_gradient_matches_finite_difference():
    hp, params, batch = _batch(4)
    hp = dataclasses.replace(hp, margin=0.7)
    _, g = loss_and_gradients(batch, params, hp)
    assert max_relative_error(g.arrays(), finite_difference(batch, params, hp)) < 1e-4


def test_gradient_agrees_with_loss():
    hp, params, batch = _batch(5)
    loss, _ = loss_and_gradients(batch, params, hp)
    assert loss == total_loss(batch, params, hp)


def test_distinct_movies_counted_once():
    X = np.eye(4)
    b1 = make_batch(X, X != 0, X, X != 0, [0, 0, 1], [0, 1, 1], [1, -1, 1])
    assert b1.x_a.shape[0] == 2 and b1.x_b.shape[0] == 2


def test_zero_lr_leaves_params_unchanged():
    fa, fb, pairs = tiny_problem()
    hp = HyperParams(layer_dims=(6, 3), learning_rate=0.0, epochs=3, batch_size=5)
    p0 = init_params(fa.dim, fb.dim, hp)
    p1, rep = train(fa, fb, pairs, hp)
    assert len(rep) == 3
    for a, b in zip(p0.arrays(), p1.arrays()):
        assert np.array_equal(a, b)


def test_training_reduces_loss_and_is_reproducible():
    fa, fb, pairs = tiny_problem()
    hp = HyperParams(layer_dims=(6, 3), gamma=2.0, learning_rate=0.05, epochs=30, batch_size=8)
    p1, r1 = train(fa, fb, pairs, hp)
    p2, r2 = train(fa, fb, pairs, hp)
    assert r1.total[-1] < r1.total[0]
    assert r1.total == r2.total
    assert all(np.array_equal(a, b) for a, b in zip(p1.arrays(), p2.arrays()))


def test_resume_matches_uninterrupted_run():
    fa, fb, pairs = tiny_problem()
    hp = HyperParams(layer_dims=(6, 3), gamma=2.0, learning_rate=0.05, epochs=10, batch_size=8)
    full, _ = train(fa, fb, pairs, hp)
    half, _ = train(fa, fb, pairs, dataclasses.replace(hp, epochs=5))
    rest, rep = train(fa, fb, pairs, dataclasses.replace(hp, epochs=5), params=half, start_epoch=5)
    assert rep.first_epoch == 5
    assert all(np.array_equal(a, b) for a, b in zip(full.arrays(), rest.arrays()))


def test_divergence_guard():
    fa, fb, pairs = tiny_problem()
    hp = HyperParams(layer_dims=(6, 3), learning_rate=1e300, epochs=3, batch_size=4)
    with pytest.raises(DivergenceError):
        train(fa, fb, pairs, hp)


def test_empty_pairs_rejected():
    fa, fb, _ = tiny_problem()
    with pytest.raises(InputError):
        train(fa, fb, [], HyperParams(layer_dims=(4,)))


def test_checkpoint_roundtrip(tmp_path):
    hp = HyperParams(layer_dims=(6, 3))
    p = init_params(10, 12, hp)
    save_checkpoint(tmp_path / "c.json", p, hp, 7, note="x")
    ck = load_checkpoint(tmp_path / "c.json")
    assert ck["hp"] == hp and ck["epochs_completed"] == 7 and ck["note"] == "x"
    assert all(np.array_equal(a, b) for a, b in zip(p.arrays(), ck["params"].arrays()))
    assert ck["layer_shapes"]["b"][0] == [6, 12]


def test_corrupt_checkpoint_names_field(tmp_path):
    hp = HyperParams(layer_dims=(6, 3))
    save_checkpoint(tmp_path / "c.json", init_params(10, 12, hp), hp, 1)
    obj = json.loads((tmp_path / "c.json").read_text())
    obj["params"]["a"]["dec_W"][0]["shape"] = [5, 5]
    (tmp_path / "c.json").write_text(json.dumps(obj))
    with pytest.raises(InputError, match="params.a.dec_W"):
        load_checkpoint(tmp_path / "c.json")


def test_loss_csv(tmp_path):
    fa, fb, pairs = tiny_problem()
    _, rep = train(fa, fb, pairs, HyperParams(layer_dims=(4,), epochs=2, batch_size=6, learning_rate=0.01))
    rep.to_csv(tmp_path / "l.csv")
    lines = (tmp_path / "l.csv").read_text().splitlines()
    assert lines[0] == "epoch,L_e,alpha_L_f,beta_L_reg,L" and len(lines) == 3


@pytest.mark.parametrize("bad", [{"gamma": 0.5}, {"layer_dims": ()}, {"batch_size": 0}, {"margin": -1.0}])
def test_hyperparam_validation(bad):
    with pytest.raises(ConfigError):
        HyperParams(**bad)


def test_hyperparams_from_mapping():
    hp = HyperParams.from_mapping({"layer_dims": "64, 32", "gamma": "10", "margin": "none", "epochs": "3"})
    assert hp.layer_dims == (64, 32) and hp.gamma == 10.0 and hp.margin is None and hp.epochs == 3
    with pytest.raises(ConfigError):
        HyperParams.from_mapping({"gama": "1"})


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 10_000))
def test_negative_fusion_bounded_below(seed):
    rng = np.random.default_rng(seed)
    d = int(rng.integers(1, 20))
    ya, yb = rng.random((4, d)), rng.random((4, d))
    assert fusion_loss(ya, yb, -1 * np.ones(4)) >= -4 * d
