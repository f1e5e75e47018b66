"""Tensor engine tests: frozen hand-computed values plus finite-difference
checks of every differentiable op on randomized small instances."""

import numpy as np
import pytest

from anysr.errors import ConfigError, NumericError, ShapeError
from anysr.numerics import (
    Tensor,
    activation,
    add,
    backward,
    concat,
    conv2d,
    finite_diff_grad,
    gather_rows,
    global_avg_pool,
    l1_loss,
    linear,
    matmul,
    matvec,
    mean_all,
    mul,
    no_grad,
    relu,
    reshape,
    scale,
    sigmoid,
    sub,
    sum_all,
    take_slice,
    transpose,
)


# ---------------------------------------------------------------------------
# frozen forward values


def test_conv2d_identity_kernel():
    x = Tensor(np.arange(12.0).reshape(1, 3, 4), requires_grad=True)
    k = Tensor(np.ones((1, 1, 1, 1)))
    b = Tensor(np.zeros(1))
    out = conv2d(x, k, b, padding=0)
    np.testing.assert_array_equal(out.data, x.data)
    backward(sum_all(out))
    np.testing.assert_array_equal(x.grad, np.ones_like(x.data))


def test_conv2d_all_ones_window_sums():
    x = Tensor(np.ones((1, 2, 2)))
    k = Tensor(np.ones((1, 1, 3, 3)))
    b = Tensor(np.zeros(1))
    out = conv2d(x, k, b, padding=1)
    np.testing.assert_array_equal(out.data, [[[4.0, 4.0], [4.0, 4.0]]])


def test_conv2d_shape_contract():
    x = Tensor(np.random.default_rng(0).normal(size=(3, 5, 7)))
    k = Tensor(np.random.default_rng(1).normal(size=(8, 3, 3, 3)))
    b = Tensor(np.zeros(8))
    assert conv2d(x, k, b, padding=1).shape == (8, 5, 7)


def test_conv2d_validation():
    x = Tensor(np.zeros((2, 4, 4)))
    with pytest.raises(ConfigError):
        conv2d(x, Tensor(np.zeros((1, 2, 2, 2))), Tensor(np.zeros(1)), padding=0)
    with pytest.raises(ConfigError):
        conv2d(x, Tensor(np.zeros((1, 2, 3, 3))), Tensor(np.zeros(1)), padding=0)
    with pytest.raises(ShapeError):
        conv2d(x, Tensor(np.zeros((1, 3, 3, 3))), Tensor(np.zeros(1)), padding=1)


def test_matvec_values():
    eye = Tensor(np.eye(3))
    v = Tensor(np.array([1.0, 2.0, 3.0]))
    np.testing.assert_array_equal(matvec(eye, v).data, v.data)
    w = Tensor(np.array([[1.0, 2.0], [3.0, 4.0]]))
    np.testing.assert_array_equal(matvec(w, Tensor(np.ones(2))).data, [3.0, 7.0])
    zero = Tensor(np.zeros((4, 3)))
    np.testing.assert_array_equal(matvec(zero, v).data, np.zeros(4))
    with pytest.raises(ShapeError):
        matvec(w, v)


def test_activations():
    np.testing.assert_array_equal(
        activation("relu", Tensor(np.array([-1.0, 0.0, 2.0]))).data, [0.0, 0.0, 2.0]
    )
    assert activation("sigmoid", Tensor(np.array(0.0))).item() == 0.5
    assert activation("sigmoid", Tensor(np.array(np.log(3.0)))).item() == pytest.approx(0.75, abs=1e-12)
    with pytest.raises(ConfigError):
        activation("tanh", Tensor(np.zeros(1)))


def test_global_avg_pool():
    const = Tensor(np.full((5, 3, 4), 0.7))
    np.testing.assert_allclose(global_avg_pool(const).data, np.full(5, 0.7))
    f = Tensor(np.array([[[1.0, 2.0], [3.0, 4.0]]]))
    np.testing.assert_array_equal(global_avg_pool(f).data, [2.5])
    assert global_avg_pool(Tensor(np.zeros((6, 2, 9)))).shape == (6,)
    with pytest.raises(ShapeError):
        global_avg_pool(Tensor(np.zeros((2, 0, 3))))


def test_l1_loss_values_and_grad():
    a = Tensor(np.array([1.0, 2.0]), requires_grad=True)
    b = Tensor(np.array([0.0, 4.0]))
    assert l1_loss(a, Tensor(a.data.copy())).item() == 0.0
    loss = l1_loss(a, b)
    assert loss.item() == pytest.approx(1.5)
    backward(loss)
    np.testing.assert_array_equal(a.grad, [0.5, -0.5])
    with pytest.raises(ShapeError):
        l1_loss(a, Tensor(np.zeros(3)))


# ---------------------------------------------------------------------------
# backward mechanics


def test_backward_sum_gives_ones():
    x = Tensor(np.random.default_rng(3).normal(size=(2, 3, 4)), requires_grad=True)
    backward(sum_all(x))
    np.testing.assert_array_equal(x.grad, np.ones_like(x.data))


def test_backward_requires_scalar():
    x = Tensor(np.zeros(3), requires_grad=True)
    with pytest.raises(ShapeError):
        backward(add(x, x))


def test_unused_parameter_keeps_no_grad():
    x = Tensor(np.ones(2), requires_grad=True)
    unused = Tensor(np.ones(2), requires_grad=True)
    backward(sum_all(x))
    assert unused.grad is None
    assert x.grad is not None


def test_backward_twice_doubles_grads():
    x = Tensor(np.array([1.0, -2.0, 3.0]), requires_grad=True)
    loss = sum_all(mul(x, x))
    backward(loss)
    once = x.grad.copy()
    backward(loss)
    np.testing.assert_array_equal(x.grad, 2.0 * once)


def test_backward_deterministic():
    def run():
        rng = np.random.default_rng(11)
        x = Tensor(rng.normal(size=(2, 6, 6)), requires_grad=True)
        k = Tensor(rng.normal(size=(3, 2, 3, 3)), requires_grad=True)
        loss = l1_loss(conv2d(x, k, Tensor(np.zeros(3)), 1), Tensor(np.zeros((3, 6, 6))))
        backward(loss)
        return x.grad.tobytes(), k.grad.tobytes()

    assert run() == run()


def test_reused_node_accumulates():
    x = Tensor(np.array([3.0]), requires_grad=True)
    y = add(x, x)
    backward(sum_all(y))
    np.testing.assert_array_equal(x.grad, [2.0])


def test_no_grad_suppresses_graph():
    x = Tensor(np.ones(4), requires_grad=True)
    with no_grad():
        y = mul(x, x)
    assert not y.requires_grad and y.is_leaf()


def test_nan_detection():
    x = Tensor(np.array([1.0, -1.0]))
    with pytest.raises(NumericError):
        scale(x, np.inf)


# ---------------------------------------------------------------------------
# finite-difference oracle


def test_finite_diff_sum_of_squares():
    g = finite_diff_grad(lambda x: float((x ** 2).sum()), np.array([1.0, 2.0]))
    np.testing.assert_allclose(g, [2.0, 4.0], atol=1e-8)


def test_finite_diff_constant_and_l1():
    np.testing.assert_array_equal(finite_diff_grad(lambda x: 1.0, np.zeros(5)), np.zeros(5))
    target = np.array([0.3, -0.2, 0.9])
    point = np.array([1.0, 0.5, -0.5])
    g = finite_diff_grad(lambda x: float(np.abs(x - target).mean()), point)
    np.testing.assert_allclose(g, np.sign(point - target) / 3.0, atol=1e-8)
    with pytest.raises(NumericError):
        finite_diff_grad(lambda x: 1.0, np.zeros(2), h=0.0)


# ---------------------------------------------------------------------------
# analytic vs numeric gradients for every differentiable op


def _check_grads(build, params, tol=1e-4):
    tracked = {k: Tensor(v, requires_grad=True) for k, v in params.items()}
    backward(build(tracked))
    for name, base in params.items():
        def fn(x, _name=name):
            probe = {k: Tensor(v) for k, v in params.items()}
            probe[_name] = Tensor(x)
            return build(probe).item()

        numeric = finite_diff_grad(fn, base)
        analytic = tracked[name].grad
        if analytic is None:
            analytic = np.zeros_like(base)
        denom = np.maximum(np.maximum(np.abs(analytic), np.abs(numeric)), 1e-6)
        worst = float((np.abs(analytic - numeric) / denom).max())
        assert worst < tol, f"{name}: relative error {worst:.2e}"


def _away_from(x, pivot=0.0, margin=0.05):
    # Nudge values away from a kink so the central difference stays one-sided.
    off = x - pivot
    x = x + np.where(np.abs(off) < margin, np.sign(off + 1e-12) * margin, 0.0)
    return x


def _proj(rng, shape):
    return Tensor(rng.normal(size=shape))


def _instances():
    cases = []
    for seed in range(6):
        rng = np.random.default_rng(100 + seed)

        def c(name, build, params, rng=rng):
            cases.append((f"{name}-{rng.bit_generator.seed_seq.entropy}", build, params))

        a, b = rng.normal(size=(3, 4)), rng.normal(size=(3, 4))
        c("add", lambda t, p=_proj(rng, (3, 4)): sum_all(mul(add(t["a"], t["b"]), p)), {"a": a, "b": b})
        c("sub", lambda t, p=_proj(rng, (3, 4)): sum_all(mul(sub(t["a"], t["b"]), p)), {"a": a.copy(), "b": b.copy()})
        c("mul_broadcast", lambda t, p=_proj(rng, (3, 4)): sum_all(mul(mul(t["a"], t["b"]), p)),
          {"a": rng.normal(size=(3, 4)), "b": rng.normal(size=(4,))})
        c("scale", lambda t: mean_all(scale(t["a"], -2.5)), {"a": rng.normal(size=(2, 5))})
        c("matvec", lambda t, p=_proj(rng, (3,)): sum_all(mul(matvec(t["w"], t["x"]), p)),
          {"w": rng.normal(size=(3, 5)), "x": rng.normal(size=(5,))})
        c("matmul", lambda t, p=_proj(rng, (2, 3)): sum_all(mul(matmul(t["a"], t["b"]), p)),
          {"a": rng.normal(size=(2, 4)), "b": rng.normal(size=(4, 3))})
        c("linear", lambda t, p=_proj(rng, (5, 2)): sum_all(mul(linear(t["x"], t["w"], t["b"]), p)),
          {"x": rng.normal(size=(5, 3)), "w": rng.normal(size=(2, 3)), "b": rng.normal(size=(2,))})
        c("conv2d", lambda t, p=_proj(rng, (2, 4, 4)): sum_all(mul(conv2d(t["x"], t["k"], t["b"], 1), p)),
          {"x": rng.normal(size=(3, 4, 4)), "k": rng.normal(size=(2, 3, 3, 3)), "b": rng.normal(size=(2,))})
        c("relu", lambda t, p=_proj(rng, (4, 4)): sum_all(mul(relu(t["x"]), p)),
          {"x": _away_from(rng.normal(size=(4, 4)))})
        c("sigmoid", lambda t, p=_proj(rng, (6,)): sum_all(mul(sigmoid(t["x"]), p)),
          {"x": rng.normal(size=(6,))})
        c("gap", lambda t, p=_proj(rng, (3,)): sum_all(mul(global_avg_pool(t["x"]), p)),
          {"x": rng.normal(size=(3, 2, 5))})
        c("l1", lambda t, tgt=Tensor(rng.normal(size=(3, 3))): l1_loss(t["a"], tgt),
          {"a": _away_from(rng.normal(size=(3, 3)) + 5.0, pivot=5.0)})
        c("mean", lambda t: mean_all(t["x"]), {"x": rng.normal(size=(7,))})
        c("reshape", lambda t, p=_proj(rng, (6, 2)): sum_all(mul(reshape(t["x"], (6, 2)), p)),
          {"x": rng.normal(size=(3, 4))})
        c("transpose", lambda t, p=_proj(rng, (4, 2, 3)): sum_all(mul(transpose(t["x"], (2, 0, 1)), p)),
          {"x": rng.normal(size=(2, 3, 4))})
        c("concat", lambda t, p=_proj(rng, (7,)): sum_all(mul(concat([t["a"], t["b"]], 0), p)),
          {"a": rng.normal(size=(3,)), "b": rng.normal(size=(4,))})
        c("take_slice", lambda t, p=_proj(rng, (2, 3)): sum_all(mul(take_slice(t["x"], (slice(0, 2), slice(1, 4))), p)),
          {"x": rng.normal(size=(5, 6))})
        idx = rng.integers(0, 4, size=9)
        c("gather", lambda t, p=_proj(rng, (9, 3)), i=idx: sum_all(mul(gather_rows(t["x"], i), p)),
          {"x": rng.normal(size=(4, 3))})
    return cases


@pytest.mark.parametrize("name,build,params", _instances(), ids=lambda v: v if isinstance(v, str) else "")
def test_op_gradients_match_finite_differences(name, build, params):
    _check_grads(build, params)
