import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from baitscore.autodiff import (
    AdamOptimizer,
    AdamState,
    GradientError,
    Parameter,
    Tensor,
    adam_step,
    backward,
    concat,
    constant,
    conv1d,
    embedding_lookup,
    global_max_pool1d,
    glorot_uniform,
    grad_check,
    load_checkpoint,
    matmul,
    max_pool1d,
    mse,
    relu,
    reshape,
    save_checkpoint,
    scale,
    select_time,
    sigmoid,
    slice_last,
    sum_all,
    tanh,
)

# -- independent oracles, defined before anything asserts against them ------


def conv1d_naive(x: np.ndarray, k: np.ndarray) -> np.ndarray:
    """Quintuple loop valid convolution; slow but unarguable."""
    B, T, cin = x.shape
    kk, _, cout = k.shape
    out = np.zeros((B, T - kk + 1, cout))
    for b in range(B):
        for t in range(T - kk + 1):
            for o in range(cout):
                acc = 0.0
                for j in range(kk):
                    for c in range(cin):
                        acc += x[b, t + j, c] * k[j, c, o]
                out[b, t, o] = acc
    return out


def adam_naive(theta: float, grads: list[float], lr=0.001, b1=0.9, b2=0.999,
               eps=1e-8) -> list[float]:
    """Scalar reference trajectory using the textbook recurrences."""
    m = v = 0.0
    path = []
    for t, g in enumerate(grads, start=1):
        m = b1 * m + (1.0 - b1) * g
        v = b2 * v + (1.0 - b2) * g * g
        m_hat = m / (1.0 - b1**t)
        v_hat = v / (1.0 - b2**t)
        theta = theta - lr * m_hat / (math.sqrt(v_hat) + eps)
        path.append(theta)
    return path


def check_gradients(build_loss, params, tol=1e-6):
    err = grad_check(build_loss, params, perturbation=1e-5)
    assert err < tol, f"worst relative gradient error {err:.3e}"


RNG = np.random.default_rng(2024)


def param(name, shape, spread=1.0):
    return Parameter(name, RNG.standard_normal(shape) * spread)


# -- forward values ----------------------------------------------------------


class TestForward:
    def test_add_broadcasts_bias(self):
        x = constant(np.ones((2, 3)))
        b = constant(np.array([1.0, 2.0, 3.0]))
        assert np.array_equal((x + b).data, [[2, 3, 4], [2, 3, 4]])

    def test_matmul_matches_numpy(self):
        a, b = RNG.standard_normal((3, 4)), RNG.standard_normal((4, 2))
        out = matmul(constant(a), constant(b))
        np.testing.assert_allclose(out.data, a @ b, rtol=1e-15)

    def test_matmul_rejects_vectors(self):
        with pytest.raises(GradientError, match="2-D"):
            matmul(constant(np.ones(3)), constant(np.ones((3, 2))))

    def test_sigmoid_extremes_stay_finite(self):
        out = sigmoid(constant(np.array([-1000.0, 0.0, 1000.0])))
        np.testing.assert_allclose(out.data, [0.0, 0.5, 1.0], atol=1e-12)

    def test_conv1d_matches_naive(self):
        x = RNG.standard_normal((2, 7, 3))
        k = RNG.standard_normal((3, 3, 4))
        out = conv1d(constant(x), constant(k))
        np.testing.assert_allclose(out.data, conv1d_naive(x, k), rtol=1e-12)

    def test_conv1d_kernel_too_long(self):
        with pytest.raises(GradientError, match="longer"):
            conv1d(constant(np.ones((1, 2, 1))), constant(np.ones((3, 1, 1))))

    def test_max_pool_drops_tail(self):
        x = np.arange(7, dtype=float).reshape(1, 7, 1)
        out = max_pool1d(constant(x), 2)
        assert out.data.ravel().tolist() == [1.0, 3.0, 5.0]

    def test_global_max_pool(self):
        x = np.array([[[1.0, 9.0], [5.0, 2.0], [3.0, 3.0]]])
        out = global_max_pool1d(constant(x))
        assert out.data.tolist() == [[5.0, 9.0]]

    def test_embedding_gathers_rows(self):
        table = constant(np.arange(12, dtype=float).reshape(4, 3))
        out = embedding_lookup(table, np.array([[1, 0], [3, 3]]))
        np.testing.assert_array_equal(
            out.data, [[[3, 4, 5], [0, 1, 2]], [[9, 10, 11], [9, 10, 11]]]
        )

    def test_embedding_rejects_float_indices(self):
        with pytest.raises(GradientError, match="integers"):
            embedding_lookup(constant(np.ones((2, 2))), np.array([0.0]))

    def test_mse_value(self):
        out = mse(constant(np.array([1.0, 2.0])), np.array([0.0, 0.0]))
        assert out.data == pytest.approx(2.5)

    def test_mse_shape_mismatch(self):
        with pytest.raises(GradientError, match="mismatch"):
            mse(constant(np.ones(3)), np.ones(4))

    @given(st.lists(st.floats(-50, 50), min_size=1, max_size=20))
    @settings(max_examples=60, deadline=None)
    def test_activation_ranges(self, values):
        # closed bounds: float64 rounds sigmoid(37) to exactly 1.0
        x = constant(np.array(values))
        assert np.all((sigmoid(x).data >= 0) & (sigmoid(x).data <= 1))
        assert np.all(np.abs(tanh(x).data) <= 1)
        assert np.all(relu(x).data >= 0)


# -- gradients, every primitive against central differences -----------------


class TestGradients:
    def test_add_mul(self):
        a, b = param("a", (3, 4)), param("b", (4,))
        check_gradients(lambda: sum_all((a.node() + b.node()) * a.node()), [a, b])

    def test_scale(self):
        a = param("a", (5,))
        check_gradients(lambda: sum_all(scale(a.node(), -2.5)), [a])

    def test_matmul(self):
        a, b = param("a", (3, 4)), param("b", (4, 2))
        check_gradients(lambda: sum_all(matmul(a.node(), b.node())), [a, b])

    def test_sigmoid_tanh(self):
        a = param("a", (6,))
        check_gradients(lambda: sum_all(sigmoid(tanh(a.node()))), [a])

    def test_relu_away_from_kink(self):
        vals = RNG.standard_normal((8,))
        vals = np.where(np.abs(vals) < 0.2, 0.5, vals)  # keep off the kink
        a = Parameter("a", vals)
        check_gradients(lambda: sum_all(relu(a.node())), [a])

    def test_conv1d(self):
        x, k = param("x", (2, 6, 3)), param("k", (3, 3, 2))
        check_gradients(lambda: sum_all(conv1d(x.node(), k.node())), [x, k])

    def test_max_pool(self):
        x = param("x", (2, 6, 3))
        check_gradients(lambda: sum_all(max_pool1d(x.node(), 2)), [x])

    def test_global_max_pool(self):
        x = param("x", (2, 5, 4))
        check_gradients(lambda: sum_all(global_max_pool1d(x.node())), [x])

    def test_concat(self):
        a, b = param("a", (2, 3)), param("b", (2, 5))
        check_gradients(
            lambda: sum_all(sigmoid(concat([a.node(), b.node()], axis=-1))), [a, b]
        )

    def test_slice_last(self):
        a = param("a", (2, 8))
        check_gradients(lambda: sum_all(tanh(slice_last(a.node(), 2, 6))), [a])

    def test_select_time_and_reshape(self):
        a = param("a", (2, 4, 3))
        check_gradients(
            lambda: sum_all(reshape(select_time(a.node(), 1), (6,))), [a]
        )

    def test_embedding_accumulates_repeated_rows(self):
        table = param("emb", (5, 3))
        idx = np.array([[0, 2, 2, 4]])
        check_gradients(
            lambda: sum_all(tanh(embedding_lookup(table.node(), idx))), [table]
        )
        # direct: d(sum of gathered rows)/d(row 2) doubles up
        table.zero_grad()
        backward(sum_all(embedding_lookup(table.node(), idx)))
        np.testing.assert_array_equal(table.grad[2], [2.0, 2.0, 2.0])
        np.testing.assert_array_equal(table.grad[1], [0.0, 0.0, 0.0])

    def test_mse(self):
        a = param("a", (7,))
        target = RNG.standard_normal((7,))
        check_gradients(lambda: mse(sigmoid(a.node()), target), [a])

    def test_fan_out_accumulates(self):
        a = Parameter("a", np.array([3.0]))
        node = a.node()
        backward(sum_all(node * node + node))
        # d/dx (x^2 + x) = 2x + 1
        assert a.grad[0] == pytest.approx(7.0)

    def test_backward_requires_scalar(self):
        a = param("a", (3,))
        with pytest.raises(GradientError, match="scalar"):
            backward(a.node() + a.node())

    def test_grads_accumulate_until_zeroed(self):
        a = Parameter("a", np.array([1.0, 2.0]))
        for _ in range(2):
            backward(sum_all(a.node()))
        np.testing.assert_array_equal(a.grad, [2.0, 2.0])
        a.zero_grad()
        np.testing.assert_array_equal(a.grad, [0.0, 0.0])

    def test_non_trainable_gets_no_grad(self):
        a = Parameter("a", np.array([1.0]), trainable=False)
        backward(sum_all(a.node()))
        np.testing.assert_array_equal(a.grad, [0.0])


# -- ADAM --------------------------------------------------------------------


class TestAdam:
    def test_first_step_closed_form(self):
        # bias correction makes step one exactly lr * g / (|g| + eps)
        p = Parameter("w", np.array([0.0]))
        p.grad = np.array([0.5])
        adam_step(p, AdamState.for_parameter(p, lr=0.001))
        expected = -0.001 * 0.5 / (0.5 + 1e-8)
        assert p.value[0] == pytest.approx(expected, rel=1e-12)

    def test_trajectory_matches_scalar_reference(self):
        grads = [0.5, -1.25, 0.075, 2.0, -0.3]
        p = Parameter("w", np.array([0.1]))
        state = AdamState.for_parameter(p, lr=0.01)
        seen = []
        for g in grads:
            p.grad = np.array([g])
            adam_step(p, state)
            seen.append(float(p.value[0]))
        np.testing.assert_allclose(seen, adam_naive(0.1, grads, lr=0.01), rtol=1e-12)

    def test_step_size_invariant_to_gradient_scale(self):
        # (lr * m_hat / sqrt(v_hat)) is scale-free for a constant gradient
        outs = []
        for g in (0.001, 1000.0):
            p = Parameter("w", np.array([0.0]))
            p.grad = np.array([g])
            adam_step(p, AdamState.for_parameter(p, lr=0.001))
            outs.append(abs(float(p.value[0])))
        assert outs[0] == pytest.approx(outs[1], rel=1e-4)

    def test_optimizer_skips_frozen(self):
        w = Parameter("w", np.array([1.0]))
        frozen = Parameter("f", np.array([1.0]), trainable=False)
        opt = AdamOptimizer([w, frozen], lr=0.1)
        w.grad = np.array([1.0])
        frozen.grad = np.array([1.0])
        opt.step()
        assert w.value[0] != 1.0
        assert frozen.value[0] == 1.0

    def test_descends_a_quadratic(self):
        p = Parameter("w", np.array([5.0]))
        opt = AdamOptimizer([p], lr=0.05)
        for _ in range(800):
            opt.zero_grad()
            backward(mse(p.node(), np.array([2.0])))
            opt.step()
        assert p.value[0] == pytest.approx(2.0, abs=1e-3)

    def test_shape_mismatch_rejected(self):
        p = Parameter("w", np.array([1.0, 2.0]))
        p.grad = np.zeros((3,))
        with pytest.raises(GradientError, match="shape"):
            adam_step(p, AdamState.for_parameter(p))


# -- init + persistence ------------------------------------------------------


class TestInitAndCheckpoints:
    def test_glorot_bounds_and_determinism(self):
        limit = math.sqrt(6.0 / (30 + 50))
        a = glorot_uniform((30, 50), 30, 50, np.random.default_rng(3))
        b = glorot_uniform((30, 50), 30, 50, np.random.default_rng(3))
        assert np.abs(a).max() <= limit
        np.testing.assert_array_equal(a, b)
        # spread should roughly fill the interval
        assert np.abs(a).max() > 0.8 * limit

    def test_checkpoint_round_trip(self, tmp_path):
        params = [
            Parameter("emb", RNG.standard_normal((4, 3))),
            Parameter("w", RNG.standard_normal((3,))),
            Parameter("scalar", np.array(2.5)),
        ]
        path = str(tmp_path / "model.ckpt")
        save_checkpoint(path, params)
        loaded = load_checkpoint(path)
        assert list(loaded) == ["emb", "w", "scalar"]
        for p in params:
            np.testing.assert_array_equal(loaded[p.name], p.value)

    def test_checkpoint_rejects_other_files(self, tmp_path):
        path = tmp_path / "junk.ckpt"
        path.write_bytes(b"PNG!not a checkpoint")
        with pytest.raises(GradientError, match="magic"):
            load_checkpoint(str(path))

    def test_grad_check_catches_a_wrong_gradient(self):
        # a deliberately broken op must fail the checker, or the checker
        # itself proves nothing
        a = Parameter("a", np.array([1.0, 2.0]))

        def broken_square(x: Tensor) -> Tensor:
            out = Tensor(x.data**2, parents=(x,))
            out.backward_fn = lambda g: x._accumulate(g * x.data)  # missing *2
            return out

        err = grad_check(lambda: sum_all(broken_square(a.node())), [a])
        assert err > 0.1
