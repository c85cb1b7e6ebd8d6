"""Analytic gradients vs the central finite-difference oracle.

Every layer kind is checked on 20+ seeded random instances at step 1e-4
with relative error below 1e-4, plus a whole-network check that runs
finite differences over every parameter of a stack containing all kinds.
"""

import numpy as np
import pytest

import fdcheck
from d2fld.net import network, ops

SEEDS = list(range(100, 120))


@pytest.mark.parametrize("kind", sorted(fdcheck.LAYER_CHECKS))
def test_layer_gradients(kind):
    check = fdcheck.LAYER_CHECKS[kind]
    worst = max(check(seed) for seed in SEEDS)
    assert worst < fdcheck.REL_TOL, f"{kind}: worst relative error {worst:.2e}"


@pytest.mark.parametrize("seed", [11, 12, 13])
def test_full_network_gradients(seed):
    worst = fdcheck.check_full_network(seed)
    assert worst < fdcheck.REL_TOL, f"full network: worst relative error {worst:.2e}"


def test_dense_softmax_ce_closed_form():
    # For dense -> softmax -> CE the input-weight gradient collapses to
    # (p - onehot) outer x.
    rng = np.random.default_rng(0)
    spec = network.NetworkSpec(
        input_shape=(1, 4),
        layers=(network.Flatten(), network.Dense(4, 2), network.Softmax()),
    )
    params = network.init_params(spec, rng, dtype=np.float64)
    x = rng.standard_normal((1, 4))
    label = np.array([1])
    out, tape = network.forward(spec, params, x, train=True)
    grads = network.backward(spec, params, tape, label)
    onehot = np.array([0.0, 1.0])
    expected_w = np.outer(out - onehot, x.ravel())
    np.testing.assert_allclose(grads.by_layer[1]["weight"], expected_w, rtol=1e-10)
    np.testing.assert_allclose(grads.by_layer[1]["bias"], out - onehot, rtol=1e-10)


def test_saturated_prediction_gives_zero_gradients():
    # When the predicted probability is exactly the (clamped) one-hot,
    # there is no learning signal anywhere in the stack.
    spec = network.NetworkSpec(
        input_shape=(1, 2),
        layers=(network.Flatten(), network.Dense(2, 2), network.Softmax()),
    )
    params = network.ParameterSet(
        {1: {"weight": np.array([[400.0, 0.0], [-400.0, 0.0]], dtype=np.float32),
             "bias": np.zeros(2, dtype=np.float32)}}
    )
    x = np.array([[1.0, 0.0]], dtype=np.float32)
    out, tape = network.forward(spec, params, x, train=True)
    assert out[0] == 1.0 and out[1] == 0.0
    grads = network.backward(spec, params, tape, np.array([0]))
    for _, _, g in grads.iter_tensors():
        np.testing.assert_allclose(g, 0.0, atol=1e-12)


def test_backward_without_forward_rejected():
    spec = fdcheck.tiny_full_spec()
    params = network.init_params(spec, np.random.default_rng(0))
    with pytest.raises(ValueError, match="train-mode forward"):
        network.backward(spec, params, None, np.array([0]))


def test_backward_with_stale_tape_rejected():
    spec = fdcheck.tiny_full_spec()
    params = network.init_params(spec, np.random.default_rng(0))
    with pytest.raises(ValueError, match="tape"):
        network.backward(spec, params, [None, None], np.array([0]))


def test_forward_backward_stay_finite():
    rng = np.random.default_rng(77)
    spec = fdcheck.tiny_full_spec()
    params = network.init_params(spec, rng)
    for _ in range(5):
        x = rng.standard_normal((8, 2, 68)).astype(np.float32)
        out, tape = network.forward(spec, params, x, train=True, rng=rng)
        assert np.isfinite(out).all()
        grads = network.backward(spec, params, tape, rng.integers(0, 2, size=8))
        for _, _, g in grads.iter_tensors():
            assert np.isfinite(g).all()
