import numpy as np
import pytest

from guardnet.errors import NumericError, RangeError, ShapeError
from guardnet.nn.functional import (
    LOG_PROB_FLOOR,
    BatchNormState,
    ConvSpec,
    activation_grad,
    apply_activation,
    batchnorm_backward,
    batchnorm_forward,
    conv2d_backward,
    conv2d_forward,
    cross_entropy,
    dense_backward,
    dense_forward,
    softmax,
    softmax_cross_entropy,
)
from guardnet.nn.gradcheck import (
    DEFAULT_TOLERANCE,
    numeric_gradient,
    relative_error,
    weighted_sum,
)

SEEDS = range(20)


def _conv_case(seed: int, depthwise: bool):
    rng = np.random.default_rng(seed)
    n = int(rng.integers(1, 3))
    h, w = (int(v) for v in rng.integers(3, 7, size=2))
    cin = int(rng.integers(1, 4))
    kernel = (3, 3) if rng.random() < 0.7 else (1, 1)
    stride = int(rng.choice([1, 2]))
    cout = cin * int(rng.integers(1, 3)) if depthwise else int(rng.integers(1, 5))
    spec = ConvSpec(cin, cout, kernel, (stride, stride), "same", depthwise=depthwise)
    x = rng.standard_normal((n, h, w, cin))
    W = rng.standard_normal(spec.weight_shape)
    b = rng.standard_normal(cout)
    upstream = rng.standard_normal((n, *spec.output_size(h, w), cout))
    return spec, x, W, b, upstream


@pytest.mark.parametrize("depthwise", [False, True], ids=["conv", "depthwise"])
@pytest.mark.parametrize("seed", SEEDS)
def test_conv_gradients_match_finite_differences(seed: int, depthwise: bool) -> None:
    spec, x, W, b, upstream = _conv_case(seed, depthwise)

    grad = conv2d_backward(x, spec, W, upstream, b=b)

    def objective() -> float:
        return weighted_sum(conv2d_forward(x, spec, W, b), upstream)

    for array, analytic in ((x, grad.d_input), (W, grad.param("W")), (b, grad.param("b"))):
        numeric = numeric_gradient(objective, array)
        assert relative_error(analytic, numeric) < DEFAULT_TOLERANCE


@pytest.mark.parametrize("mode", ["train", "eval"])
@pytest.mark.parametrize("seed", SEEDS)
def test_batchnorm_gradients_match_finite_differences(seed: int, mode: str) -> None:
    rng = np.random.default_rng(100 + seed)
    channels = int(rng.integers(1, 5))
    shape = (int(rng.integers(2, 4)), int(rng.integers(2, 4)), int(rng.integers(2, 4)), channels)
    x = rng.standard_normal(shape) * 2.0 + 0.5
    state = BatchNormState.create(channels, dtype=np.float64)
    state.gamma[...] = rng.uniform(0.5, 1.5, channels)
    state.beta[...] = rng.standard_normal(channels)
    state.running_mean[...] = rng.standard_normal(channels)
    state.running_var[...] = rng.uniform(0.5, 2.0, channels)
    upstream = rng.standard_normal(shape)

    grad = batchnorm_backward(x, state, upstream, mode)

    def objective() -> float:
        return weighted_sum(batchnorm_forward(x, state, mode), upstream)

    for array, analytic in (
        (x, grad.d_input),
        (state.gamma, grad.param("gamma")),
        (state.beta, grad.param("beta")),
    ):
        numeric = numeric_gradient(objective, array)
        assert relative_error(analytic, numeric) < DEFAULT_TOLERANCE


@pytest.mark.parametrize("seed", SEEDS)
def test_dense_gradients_match_finite_differences(seed: int) -> None:
    rng = np.random.default_rng(200 + seed)
    n, fin, fout = (int(v) for v in rng.integers(1, 6, size=3))
    x = rng.standard_normal((n, fin))
    W = rng.standard_normal((fin, fout))
    b = rng.standard_normal(fout)
    upstream = rng.standard_normal((n, fout))

    grad = dense_backward(x, W, upstream)

    def objective() -> float:
        return weighted_sum(dense_forward(x, W, b), upstream)

    for array, analytic in ((x, grad.d_input), (W, grad.param("W")), (b, grad.param("b"))):
        assert relative_error(analytic, numeric_gradient(objective, array)) < DEFAULT_TOLERANCE


@pytest.mark.parametrize("reduction", ["mean", "sum"])
@pytest.mark.parametrize("seed", SEEDS)
def test_softmax_cross_entropy_gradient(seed: int, reduction: str) -> None:
    rng = np.random.default_rng(300 + seed)
    n, k = int(rng.integers(1, 6)), int(rng.integers(2, 6))
    logits = rng.standard_normal((n, k)) * 3.0
    onehot = np.eye(k)[rng.integers(0, k, size=n)]

    _, d_logits, _ = softmax_cross_entropy(logits, onehot, reduction)

    def objective() -> float:
        return softmax_cross_entropy(logits, onehot, reduction)[0]

    assert relative_error(d_logits, numeric_gradient(objective, logits)) < DEFAULT_TOLERANCE


@pytest.mark.parametrize("kind", ["relu", "relu6"])
def test_activation_gradient_away_from_kinks(kind: str) -> None:
    rng = np.random.default_rng(7)
    z = rng.uniform(-3.0, 9.0, size=200)
    kinks = np.array([0.0, 6.0])
    z = z[np.min(np.abs(z[:, None] - kinks[None, :]), axis=1) > 1e-2]
    upstream = rng.standard_normal(z.shape)

    numeric = numeric_gradient(lambda: weighted_sum(apply_activation(z, kind), upstream), z)

    np.testing.assert_allclose(activation_grad(z, kind) * upstream, numeric, atol=1e-6)


def test_relu6_clips_both_ends() -> None:
    z = np.array([-1.0, 0.0, 3.0, 6.0, 7.5])

    np.testing.assert_array_equal(apply_activation(z, "relu6"), [0.0, 0.0, 3.0, 6.0, 6.0])


def test_conv_same_padding_output_size() -> None:
    spec = ConvSpec(3, 4, (3, 3), (2, 2), "same")
    x = np.zeros((1, 7, 7, 3), dtype=np.float32)
    W = np.zeros(spec.weight_shape, dtype=np.float32)

    out = conv2d_forward(x, spec, W, np.zeros(4, dtype=np.float32))

    assert out.shape == (1, 4, 4, 4)


def test_depthwise_output_channel_order() -> None:
    spec = ConvSpec(2, 4, (1, 1), (1, 1), depthwise=True)
    x = np.array([[[[2.0, 3.0]]]])
    W = np.array([[[[1.0, 10.0], [100.0, 1000.0]]]])

    out = conv2d_forward(x, spec, W, np.zeros(4))

    np.testing.assert_array_equal(out[0, 0, 0], [2.0, 20.0, 300.0, 3000.0])


def test_conv_rejects_wrong_channels() -> None:
    spec = ConvSpec(3, 4)
    with pytest.raises(ShapeError):
        conv2d_forward(
            np.zeros((1, 4, 4, 2)), spec, np.zeros(spec.weight_shape), np.zeros(4)
        )


def _direct_conv(x: np.ndarray, W: np.ndarray, b: np.ndarray, pad: int) -> np.ndarray:
    n, h, w, cin = x.shape
    kh, kw, _, cout = W.shape
    xp = np.pad(x, ((0, 0), (pad, pad), (pad, pad), (0, 0)))
    out_h, out_w = h + 2 * pad - kh + 1, w + 2 * pad - kw + 1
    out = np.zeros((n, out_h, out_w, cout))
    for s in range(n):
        for r in range(out_h):
            for q in range(out_w):
                for o in range(cout):
                    total = b[o]
                    for i in range(kh):
                        for j in range(kw):
                            for c in range(cin):
                                total += xp[s, r + i, q + j, c] * W[i, j, c, o]
                    out[s, r, q, o] = total
    return out


def test_conv_matches_direct_loop_convolution() -> None:
    rng = np.random.default_rng(11)
    x = rng.standard_normal((1, 8, 8, 3))
    spec = ConvSpec(3, 4, (3, 3), (1, 1), "same")
    W = rng.standard_normal(spec.weight_shape)
    b = rng.standard_normal(4)

    out = conv2d_forward(x, spec, W, b)

    np.testing.assert_allclose(out, _direct_conv(x, W, b, pad=1), rtol=1e-10, atol=1e-10)


def test_ones_kernel_sums_each_window() -> None:
    spec = ConvSpec(1, 1, (3, 3), (1, 1), "valid")
    x = np.ones((1, 5, 5, 1))

    out = conv2d_forward(x, spec, np.ones(spec.weight_shape), np.zeros(1))

    np.testing.assert_array_equal(out, np.full((1, 3, 3, 1), 9.0))


def test_identity_pointwise_conv_returns_input() -> None:
    rng = np.random.default_rng(12)
    x = rng.standard_normal((2, 4, 5, 6))
    spec = ConvSpec(6, 6, (1, 1), (1, 1), "same")
    W = np.eye(6).reshape(1, 1, 6, 6)

    out = conv2d_forward(x, spec, W, np.zeros(6))

    np.testing.assert_array_equal(out, x)


def test_batchnorm_train_output_has_beta_mean_and_gamma_variance() -> None:
    rng = np.random.default_rng(13)
    x = rng.standard_normal((16, 4, 4, 3)) * np.array([2.0, 0.5, 3.0]) + np.array([1.0, -4.0, 0.0])
    state = BatchNormState.create(3, dtype=np.float64)
    state.gamma[...] = [0.5, 2.0, 1.5]
    state.beta[...] = [-1.0, 0.25, 3.0]

    y = batchnorm_forward(x, state, "train")

    np.testing.assert_allclose(y.mean(axis=(0, 1, 2)), state.beta, atol=1e-4)
    np.testing.assert_allclose(y.var(axis=(0, 1, 2)), state.gamma**2, rtol=1e-4)


def test_batchnorm_train_updates_running_stats() -> None:
    rng = np.random.default_rng(0)
    x = rng.standard_normal((8, 3)) * 2.0 + 1.0
    state = BatchNormState.create(3, dtype=np.float64)

    batchnorm_forward(x, state, "train")

    np.testing.assert_allclose(state.running_mean, 0.1 * x.mean(axis=0))
    np.testing.assert_allclose(state.running_var, 0.9 + 0.1 * x.var(axis=0))


def test_batchnorm_eval_leaves_running_stats_alone() -> None:
    state = BatchNormState.create(2, dtype=np.float64)
    state.running_mean[...] = [1.0, -1.0]
    state.running_var[...] = [4.0, 0.25]
    before = (state.running_mean.copy(), state.running_var.copy())

    y = batchnorm_forward(np.array([[3.0, -1.5]]), state, "eval")

    np.testing.assert_allclose(y, [[1.0, -1.0]], atol=1e-4)
    np.testing.assert_array_equal(state.running_mean, before[0])
    np.testing.assert_array_equal(state.running_var, before[1])


def test_batchnorm_state_rejects_bad_momentum() -> None:
    with pytest.raises(RangeError):
        BatchNormState.create(2, momentum=1.5)


def test_softmax_rows_sum_to_one_and_shift_invariant() -> None:
    rng = np.random.default_rng(11)
    for _ in range(100):
        n, k = int(rng.integers(1, 8)), int(rng.integers(2, 8))
        scale = 10.0 ** rng.uniform(-2, 3)
        z = rng.uniform(-1.0, 1.0, size=(n, k)) * scale
        shift = rng.uniform(-1e3, 1e3)

        probs = softmax(z)

        np.testing.assert_allclose(probs.sum(axis=1), 1.0, atol=1e-6)
        np.testing.assert_allclose(softmax(z + shift), probs, atol=1e-6)
        assert np.all(probs >= 0)


def test_softmax_needs_two_classes() -> None:
    with pytest.raises(ShapeError):
        softmax(np.zeros((3, 1)))


def test_softmax_rejects_nan() -> None:
    with pytest.raises(NumericError):
        softmax(np.array([[0.0, np.nan]]))


def test_cross_entropy_floors_zero_probability() -> None:
    probs = np.array([[1.0, 0.0, 0.0]])
    onehot = np.array([[0.0, 1.0, 0.0]])

    loss, _ = cross_entropy(probs, onehot)

    assert loss == pytest.approx(-np.log(LOG_PROB_FLOOR))


def test_cross_entropy_rejects_soft_labels() -> None:
    with pytest.raises(RangeError):
        cross_entropy(np.full((1, 2), 0.5), np.full((1, 2), 0.5))


def test_cross_entropy_uniform_prediction() -> None:
    probs = np.full((4, 3), 1 / 3)
    onehot = np.eye(3)[[0, 1, 2, 0]]

    loss, grad = cross_entropy(probs, onehot)

    assert loss == pytest.approx(np.log(3))
    np.testing.assert_allclose(grad, (probs - onehot) / 4)
