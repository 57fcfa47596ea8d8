import numpy as np
import pytest

from mgdispatch.core import seeded_rng
from mgdispatch.rl.nn import (
    HIDDEN_SIZES,
    Adam,
    ShapeMismatch,
    clip_by_global_norm,
    finite_difference_check,
    init_mlp,
    mlp_backward,
    mlp_forward,
)


def test_default_hidden_sizes():
    assert HIDDEN_SIZES == (512, 128, 64)
    params = init_mlp((9, *HIDDEN_SIZES, 7), seeded_rng(0))
    assert [p.shape for p in params[::2]] == [(9, 512), (512, 128), (128, 64), (64, 7)]


def test_zero_weights_give_zero_output():
    params = [np.zeros_like(p) for p in init_mlp((5, 8, 4, 3), seeded_rng(0))]
    out, _ = mlp_forward(params, np.ones(5))
    assert np.array_equal(out, np.zeros((1, 3)))


def test_no_dropout_train_equals_eval():
    params = init_mlp((5, 16, 8, 3), seeded_rng(1))
    x = seeded_rng(2).random((4, 5))
    a, _ = mlp_forward(params, x, 0.0, train_mode=True, rng=seeded_rng(3))
    b, _ = mlp_forward(params, x, 0.0, train_mode=False)
    assert np.array_equal(a, b)


def test_inverted_dropout_expectation():
    # a single hidden layer keeps the output linear in the mask, so the
    # train-mode mean converges to the eval output
    params = init_mlp((6, 32, 3), seeded_rng(4))
    params[1] += 0.5  # keep hidden units active
    x = seeded_rng(5).random(6)
    eval_out, _ = mlp_forward(params, x)
    xs = np.repeat(x[None, :], 10_000, axis=0)
    train_out, _ = mlp_forward(params, xs, 0.2, train_mode=True, rng=seeded_rng(6))
    rel = np.abs(train_out.mean(axis=0) - eval_out[0]) / np.abs(eval_out[0])
    assert np.all(rel < 0.02), rel


def test_shape_mismatch():
    with pytest.raises(ShapeMismatch):
        mlp_forward(init_mlp((5, 4, 2), seeded_rng(0)), np.ones(6))


def test_backward_matches_finite_differences():
    rng = seeded_rng(7)
    params = init_mlp((5, 8, 4, 2), rng)
    x = rng.random((6, 5))
    target = rng.random((6, 2))

    def loss(ps):
        out, _ = mlp_forward(ps, x)
        return float(np.sum((out - target) ** 2))

    out, cache = mlp_forward(params, x)
    grads, _ = mlp_backward(params, cache, 2 * (out - target))
    res = finite_difference_check(loss, params, grads, 30, rng)
    assert max(r[4] for r in res) < 1e-4


def test_clip_by_global_norm():
    g = [np.array([3.0]), np.array([4.0])]
    clipped, norm = clip_by_global_norm(g, 1.0)
    assert norm == 5.0 and np.allclose([c[0] for c in clipped], [0.6, 0.8])
    same, _ = clip_by_global_norm(g, 10.0)
    assert same is g


def test_adam_first_step_is_signed_lr():
    p = [np.array([1.0, -2.0, 0.5])]
    out = Adam(p).step(p, [np.array([0.3, -4.0, 1e-3])], 0.1)
    assert np.allclose(out[0] - p[0], [-0.1, 0.1, -0.1], atol=1e-6)
