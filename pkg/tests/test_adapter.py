import numpy as np
import pytest

from zerog.adapter import (
    DenseAdapter,
    LowRankAdapter,
    apply_adapter,
    load_checkpoint,
    save_checkpoint,
)
from zerog.errors import ConfigError, DataFormatError
from zerog.optim import AdamState, optimizer_step


def test_identity_when_wdown_zero():
    a = LowRankAdapter(
        w_down=np.zeros((4, 2)), w_up=np.ones((2, 4)), alpha=2.0, dropout_rate=0.0
    )
    x = np.random.default_rng(0).normal(size=(3, 4))
    np.testing.assert_array_equal(apply_adapter(x, a), x)


def test_identity_at_initialization():
    a = LowRankAdapter.initialize(6, rank=2, dropout_rate=0.0, seed=1)
    x = np.random.default_rng(1).normal(size=(5, 6))
    np.testing.assert_array_equal(apply_adapter(x, a), x)


def test_one_line_example():
    # d=2, r=1, x=[1,0], W_down=[[1],[0]], W_up=[[0,1]], alpha=2 -> [1,2]
    a = LowRankAdapter(
        w_down=np.array([[1.0], [0.0]]),
        w_up=np.array([[0.0, 1.0]]),
        alpha=2.0,
        dropout_rate=0.0,
    )
    out = apply_adapter(np.array([[1.0, 0.0]]), a)
    np.testing.assert_array_equal(out, [[1.0, 2.0]])


def test_matches_dense_oracle():
    rng = np.random.default_rng(2)
    d, r = 10, 2
    wd = rng.normal(size=(d, r))
    wu = rng.normal(size=(r, d))
    alpha = float(rng.uniform(1, 8))
    a = LowRankAdapter(w_down=wd, w_up=wu, alpha=alpha, dropout_rate=0.0)
    x = rng.normal(size=(7, d))
    expected = x + alpha * x @ (wd @ wu)
    np.testing.assert_allclose(apply_adapter(x, a), expected, atol=1e-12)


def test_shape_mismatch():
    a = LowRankAdapter.initialize(4, rank=2)
    with pytest.raises(ConfigError):
        apply_adapter(np.zeros((2, 5)), a)


def test_dropout_inverted_scaling():
    a = LowRankAdapter.initialize(8, rank=2, dropout_rate=0.5, seed=0)
    a.w_up = np.random.default_rng(3).normal(size=a.w_up.shape)
    x = np.ones((200, 8))
    rng = np.random.default_rng(4)
    out, cache = a.forward(x, training=True, rng=rng)
    # inverted dropout keeps the mask mean near 1
    assert abs(cache["xm"].mean() - 1.0) < 0.05
    # eval mode ignores dropout entirely
    out_eval, cache_eval = a.forward(x, training=False)
    np.testing.assert_array_equal(cache_eval["xm"], x)


def test_dense_adapter_identity_and_grad():
    a = DenseAdapter.initialize(5, dropout_rate=0.0)
    x = np.random.default_rng(5).normal(size=(4, 5))
    out, cache = a.forward(x)
    np.testing.assert_array_equal(out, x)
    grads = a.zero_grads()
    g_out = np.random.default_rng(6).normal(size=(4, 5))
    a.backward(cache, g_out, grads)
    np.testing.assert_allclose(grads["w"], x.T @ g_out, atol=1e-12)


def test_checkpoint_roundtrip(tmp_path):
    rng = np.random.default_rng(7)
    a = LowRankAdapter(
        w_down=rng.normal(size=(6, 3)).astype(np.float32).astype(np.float64),
        w_up=rng.normal(size=(3, 6)).astype(np.float32).astype(np.float64),
        alpha=16.0,
        dropout_rate=0.0,
    )
    path = tmp_path / "a.zgadp"
    save_checkpoint(a, path)
    b = load_checkpoint(path)
    assert (b.dim, b.rank, b.alpha) == (6, 3, 16.0)
    np.testing.assert_array_equal(a.w_down, b.w_down)
    np.testing.assert_array_equal(a.w_up, b.w_up)


def test_checkpoint_corruption(tmp_path):
    a = LowRankAdapter.initialize(4, rank=2)
    path = tmp_path / "a.zgadp"
    save_checkpoint(a, path)
    blob = bytearray(path.read_bytes())
    blob[25] ^= 0x01
    path.write_bytes(bytes(blob))
    with pytest.raises(DataFormatError):
        load_checkpoint(path)


# ---------------------------------------------------------------- optimizer


def test_adam_zero_gradient_no_motion():
    p = {"w": np.ones((2, 2))}
    st = AdamState(weight_decay=0.0)
    assert optimizer_step(p, {"w": np.zeros((2, 2))}, st)
    np.testing.assert_array_equal(p["w"], np.ones((2, 2)))


def test_adam_step1_closed_form():
    # bias-corrected first step moves by -lr * g / (|g| + eps) elementwise
    g = np.array([[3.0, -0.5], [0.0, 10.0]])
    p = {"w": np.zeros((2, 2))}
    st = AdamState(learning_rate=1e-2, weight_decay=0.0)
    optimizer_step(p, {"w": g}, st)
    expected = -1e-2 * g / (np.abs(g) + st.epsilon)
    np.testing.assert_allclose(p["w"], expected, atol=1e-12)


def test_adam_skips_nonfinite():
    p = {"w": np.ones(3)}
    st = AdamState()
    g = np.array([1.0, np.nan, 0.0])
    assert not optimizer_step(p, {"w": g}, st)
    np.testing.assert_array_equal(p["w"], np.ones(3))
    assert st.step_count == 0


def test_adam_quadratic_descent():
    # scripted reference: minimize 0.5 * ||w - t||^2, loss must shrink
    rng = np.random.default_rng(8)
    target = rng.normal(size=(4, 4))
    p = {"w": np.zeros((4, 4))}
    st = AdamState(learning_rate=0.02, weight_decay=0.0)
    losses = []
    for _ in range(100):
        diff = p["w"] - target
        losses.append(0.5 * float(np.sum(diff**2)))
        optimizer_step(p, {"w": diff}, st)
    assert all(b < a for a, b in zip(losses[5:], losses[6:]))
    assert losses[-1] < losses[0] * 0.1


def test_adam_decoupled_weight_decay():
    p = {"w": np.full((2,), 2.0)}
    st = AdamState(learning_rate=0.1, weight_decay=0.5)
    optimizer_step(p, {"w": np.zeros(2)}, st)
    # zero gradient: only the decay term p -= lr * wd * p applies
    np.testing.assert_allclose(p["w"], 2.0 * (1 - 0.1 * 0.5))
