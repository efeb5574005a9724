"""Forward contracts of the tensor ops, the tape, Adam, and seeded init."""

import numpy as np
import pytest

import pkchat.engine as eg
from pkchat.engine import (
    OptimizerError,
    OptimizerState,
    ShapeError,
    Tape,
    Tensor,
    adam_step,
    clip_by_global_norm,
    seeded_init,
)


def test_dispatch_rejects_unknown_kind():
    with pytest.raises(ValueError, match="unknown op kind"):
        eg.forward("convolve", Tensor([1.0]))


def test_matmul_identity():
    identity = Tensor(np.eye(3))
    x = Tensor(np.random.default_rng(0).normal(size=(3, 5)))
    np.testing.assert_array_equal(eg.matmul(identity, x).data, x.data)


def test_matmul_shape_error_names_shapes():
    with pytest.raises(ShapeError, match=r"\(2, 3\).*\(2, 3\)"):
        eg.matmul(Tensor(np.zeros((2, 3))), Tensor(np.zeros((2, 3))))


def test_softmax_uniform_on_constant_rows():
    y = eg.softmax(Tensor([[0.0, 0.0, 0.0, 0.0]]))
    np.testing.assert_allclose(y.data, 0.25)


def test_softmax_shift_invariance():
    rng = np.random.default_rng(3)
    x = rng.normal(size=(4, 6))
    base = eg.softmax(Tensor(x)).data
    shifted = eg.softmax(Tensor(x + 123.456)).data
    np.testing.assert_allclose(base, shifted, atol=1e-12)


def test_log_softmax_exponentiates_to_one():
    rng = np.random.default_rng(4)
    x = Tensor(rng.normal(size=(5, 7)) * 10)
    y = eg.log_softmax(x)
    np.testing.assert_allclose(np.exp(y.data).sum(axis=1), 1.0, atol=1e-9)


def test_sigmoid_at_zero():
    assert eg.sigmoid(Tensor(0.0)).item() == 0.5


def test_masked_softmax_equals_fill_then_softmax():
    rng = np.random.default_rng(5)
    x = Tensor(rng.normal(size=(6, 9)))
    vis = rng.random((6, 9)) > 0.4
    vis[:, 3] = True
    fused = eg.masked_softmax(x, vis).data
    reference = eg.softmax(eg.masked_fill(x, ~vis, -1e9)).data
    np.testing.assert_allclose(fused, reference, atol=1e-12)


def test_masked_softmax_rejects_blank_rows():
    with pytest.raises(ShapeError, match="no visible entries"):
        eg.masked_softmax(Tensor(np.zeros((2, 3))), np.zeros((2, 3), dtype=bool))


def test_backward_square_sum():
    x = Tensor([3.0], requires_grad=True)
    with Tape() as tape:
        loss = eg.sum_(eg.multiply(x, x))
    np.testing.assert_allclose(tape.backward(loss)[x], [6.0])


def test_backward_zero_for_unused_parameter():
    x = Tensor([2.0], requires_grad=True)
    unused = Tensor([5.0], requires_grad=True)
    with Tape() as tape:
        loss = eg.sum_(eg.multiply(x, x))
    grads = tape.backward(loss)
    np.testing.assert_array_equal(grads[unused], [0.0])


def test_backward_rejects_non_scalar_loss():
    x = Tensor([1.0, 2.0], requires_grad=True)
    with Tape() as tape:
        y = eg.multiply(x, x)
    with pytest.raises(ValueError, match="scalar"):
        tape.backward(y)


def test_backward_linearity():
    rng = np.random.default_rng(9)
    w = Tensor(rng.normal(size=(4, 4)), requires_grad=True)
    x = Tensor(rng.normal(size=(2, 4)))
    a, b = 0.7, -1.3

    def losses():
        h = eg.gelu(eg.matmul(x, w))
        l1 = eg.sum_(h)
        l2 = eg.sum_(eg.multiply(h, h))
        return l1, l2

    with Tape() as t1:
        l1, _ = losses()
    g1 = t1.backward(l1)[w]
    with Tape() as t2:
        _, l2 = losses()
    g2 = t2.backward(l2)[w]
    with Tape() as t3:
        l1, l2 = losses()
        combined = eg.add(eg.multiply(l1, eg.as_tensor(a)),
                          eg.multiply(l2, eg.as_tensor(b)))
    g3 = t3.backward(combined)[w]
    np.testing.assert_allclose(g3, a * g1 + b * g2, atol=1e-10)


def test_no_recording_without_tape():
    x = Tensor([1.0], requires_grad=True)
    y = eg.multiply(x, x)  # no active tape: must not blow up later
    assert y.requires_grad


def test_embedding_rejects_out_of_range_ids():
    with pytest.raises(ShapeError, match="out of range"):
        eg.embedding(Tensor(np.zeros((4, 2))), np.array([0, 4]))


def test_concat_and_slice_round_trip():
    a = Tensor(np.arange(6.0).reshape(2, 3))
    b = Tensor(np.arange(4.0).reshape(2, 2))
    joined = eg.concat([a, b], axis=1)
    np.testing.assert_array_equal(eg.slice_(joined, (slice(None), slice(0, 3))).data,
                                  a.data)
    np.testing.assert_array_equal(eg.slice_(joined, (slice(None), slice(3, 5))).data,
                                  b.data)


def test_gather_cols_and_last():
    x = Tensor(np.arange(12.0).reshape(3, 4))
    ids = np.array([[0, 0, 3], [1, 2, 1], [3, 3, 3]])
    np.testing.assert_array_equal(eg.gather_cols(x, ids).data,
                                  [[0, 0, 3], [5, 6, 5], [11, 11, 11]])
    picks = np.array([1, 2, 0])
    np.testing.assert_array_equal(eg.gather_last(x, picks).data, [1, 6, 8])


# -- Adam -----------------------------------------------------------------

def test_adam_zero_gradient_leaves_params_unchanged():
    p = Tensor([1.0, -2.0], requires_grad=True, name="p")
    state = OptimizerState(learning_rate=0.1)
    adam_step({"p": p}, {"p": np.zeros(2)}, state)
    np.testing.assert_array_equal(p.data, [1.0, -2.0])
    assert state.step_count == 1


def test_adam_first_step_is_signed_learning_rate():
    # with fresh moments the bias-corrected first step is lr * sign(g)
    p = Tensor([0.0], requires_grad=True, name="p")
    state = OptimizerState(learning_rate=0.1, clip_norm=None)
    adam_step({"p": p}, {"p": np.array([1.0])}, state)
    np.testing.assert_allclose(p.data, [-0.1], atol=1e-8)


def test_adam_rejects_nan_gradient_naming_parameter():
    p = Tensor([0.0], requires_grad=True, name="wq")
    with pytest.raises(OptimizerError, match="wq"):
        adam_step({"wq": p}, {"wq": np.array([np.nan])},
                  OptimizerState())


def test_clip_global_norm_rescales():
    clipped, norm = clip_by_global_norm({"g": np.array([3.0, 4.0])}, 1.0)
    assert norm == 5.0
    np.testing.assert_allclose(clipped["g"], [0.6, 0.8])


def test_clip_applies_before_moments():
    p = Tensor([0.0, 0.0], requires_grad=True, name="p")
    state = OptimizerState(learning_rate=0.1, clip_norm=1.0)
    adam_step({"p": p}, {"p": np.array([3.0, 4.0])}, state)
    # the moments must have accumulated the clipped gradient [0.6, 0.8]
    np.testing.assert_allclose(state.first_moment["p"],
                               0.1 * np.array([0.6, 0.8]), atol=1e-15)
    np.testing.assert_allclose(state.second_moment["p"],
                               0.001 * np.array([0.36, 0.64]), atol=1e-15)


# -- seeded init ------------------------------------------------------------

def test_seeded_init_zeros():
    t = seeded_init((2, 2), "zeros", seed=1)
    np.testing.assert_array_equal(t.data, np.zeros((2, 2)))


def test_seeded_init_deterministic():
    a = seeded_init((3, 4), "normal-scaled", seed=11)
    b = seeded_init((3, 4), "normal-scaled", seed=11)
    np.testing.assert_array_equal(a.data, b.data)


def test_seeded_init_varies_with_seed():
    a = seeded_init((3, 4), "uniform-scaled", seed=11)
    b = seeded_init((3, 4), "uniform-scaled", seed=12)
    assert (a.data != b.data).any()


def test_seeded_init_unknown_scheme():
    with pytest.raises(ValueError, match="scheme"):
        seeded_init((2,), "orthogonal", seed=0)


def test_clip_property_post_norm_bounded():
    rng = np.random.default_rng(7)
    for _ in range(20):
        grads = {f"g{i}": rng.normal(size=(3, 3)) * rng.uniform(0.1, 9)
                 for i in range(3)}
        pre = np.sqrt(sum(float((g ** 2).sum()) for g in grads.values()))
        clipped, _ = clip_by_global_norm(grads, 1.0)
        post = np.sqrt(sum(float((g ** 2).sum()) for g in clipped.values()))
        if pre > 1.0:
            assert post <= 1.0 + 1e-9
        else:
            assert post == pre
