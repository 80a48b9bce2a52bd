"""Finite-difference gradient checks for every layer kind.

The oracle is central differences on float64 instances of the exact same
forward code paths the engine uses in training.
"""

import numpy as np
import pytest

from fedmid.engine import (
    AvgPool2D,
    BatchNorm,
    BnMode,
    Conv2D,
    Dense,
    Flatten,
    ReLU,
    cross_entropy,
)

REL_TOL = 1e-4


def numeric_grad(f, arr, h=1e-6):
    grad = np.zeros_like(arr)
    it = np.nditer(arr, flags=["multi_index"])
    for _ in it:
        idx = it.multi_index
        orig = arr[idx]
        arr[idx] = orig + h
        fp = f()
        arr[idx] = orig - h
        fm = f()
        arr[idx] = orig
        grad[idx] = (fp - fm) / (2 * h)
    return grad


def assert_close(analytic, numeric):
    # 1e-4 relative; the absolute floor covers exact-zero gradient directions
    # (e.g. a bias feeding batchnorm) where central differences return noise.
    err = np.abs(analytic - numeric) - REL_TOL * (np.abs(analytic) + np.abs(numeric))
    assert err.max() < 1e-7, f"max gradient mismatch {err.max():.3e}"


def check_layer(layer, x, rng, bn_mode=BnMode.CURRENT_BATCH):
    """Check d(sum(forward(x) * R))/d(x and params) against central differences."""
    probe = rng.normal(size=layer.forward(x.copy(), bn_mode=bn_mode).shape)

    def value():
        return float((layer.forward(x, bn_mode=bn_mode) * probe).sum())

    value()  # populate caches
    layer.zero_grads()
    dx = layer.backward(probe)
    assert_close(dx, numeric_grad(value, x))
    for name in layer.params:
        assert_close(layer.grads[name], numeric_grad(value, layer.params[name]))


def test_dense_gradients(rng):
    layer = Dense(5, 4, rng, dtype=np.float64)
    check_layer(layer, rng.normal(size=(3, 5)), rng)


def test_conv2d_gradients(rng):
    layer = Conv2D(2, 3, rng, dtype=np.float64)
    check_layer(layer, rng.normal(size=(2, 2, 6, 6)), rng)


def test_batchnorm_gradients_batch_stats(rng):
    layer = BatchNorm(4, dtype=np.float64)
    layer.params["gamma"] = rng.normal(size=4) + 1.0
    layer.params["beta"] = rng.normal(size=4)
    check_layer(layer, rng.normal(size=(6, 4)), rng)


def test_batchnorm_gradients_batch_stats_conv_input(rng):
    layer = BatchNorm(3, dtype=np.float64)
    check_layer(layer, rng.normal(size=(4, 3, 5, 5)), rng)


def test_batchnorm_gradients_running_stats(rng):
    layer = BatchNorm(4, dtype=np.float64)
    layer.state["running_mean"] = rng.normal(size=4)
    layer.state["running_var"] = rng.uniform(0.5, 2.0, size=4)
    check_layer(layer, rng.normal(size=(6, 4)), rng, bn_mode=BnMode.RUNNING_STATS)


def test_relu_gradients(rng):
    check_layer(ReLU(), rng.normal(size=(5, 7)) + 0.05, rng)


def test_flatten_gradients(rng):
    check_layer(Flatten(), rng.normal(size=(3, 2, 4, 4)), rng)


def test_avgpool_gradients(rng):
    check_layer(AvgPool2D(2), rng.normal(size=(3, 2, 4, 4)), rng)


def test_cross_entropy_gradient(rng):
    logits = rng.normal(size=(4, 5))
    labels = rng.integers(0, 5, size=4)

    def value():
        return cross_entropy(logits, labels)[0]

    _, dlogits = cross_entropy(logits, labels)
    assert_close(dlogits, numeric_grad(value, logits))


def test_single_dense_softmax_matches_finite_differences(rng):
    """One sample through one dense layer: the spec's hand-computable case."""
    layer = Dense(3, 4, rng, dtype=np.float64)
    x = rng.normal(size=(1, 3))
    label = np.array([2])

    def value():
        return cross_entropy(layer.forward(x), label)[0]

    logits = layer.forward(x)
    _, dlogits = cross_entropy(logits, label)
    layer.zero_grads()
    layer.backward(dlogits)
    assert_close(layer.grads["weight"], numeric_grad(value, layer.params["weight"]))
    assert_close(layer.grads["bias"], numeric_grad(value, layer.params["bias"]))


def test_gradients_accumulate_across_backward_calls(rng):
    layer = Dense(4, 3, rng, dtype=np.float64)
    x = rng.normal(size=(2, 4))
    probe = rng.normal(size=(2, 3))
    layer.forward(x)
    layer.zero_grads()
    layer.backward(probe)
    once = layer.grads["weight"].copy()
    layer.forward(x)
    layer.backward(probe)
    np.testing.assert_allclose(layer.grads["weight"], 2 * once)


@pytest.mark.parametrize("variant", ["tinyblock", "mlp", "mlp_nobn"])
def test_full_model_gradients(rng, variant):
    """End-to-end check through stacked layers, float64, training-mode BN."""
    from fedmid.engine import build_model

    model = build_model(variant, (1, 4, 4), 3, rng, dtype=np.float64, hidden=6, channels=2)
    x = rng.normal(size=(3, 1, 4, 4))
    labels = rng.integers(0, 3, size=3)

    def value():
        logits = model.forward(x, bn_mode=BnMode.CURRENT_BATCH)
        return cross_entropy(logits, labels)[0]

    logits = model.forward(x, bn_mode=BnMode.CURRENT_BATCH)
    _, dlogits = cross_entropy(logits, labels)
    model.zero_grads()
    model.backward(dlogits)
    for idx, layer in enumerate(model.layers):
        for name in layer.params:
            assert_close(layer.grads[name], numeric_grad(value, layer.params[name]))
