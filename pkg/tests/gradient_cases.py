"""Finite-difference gradient cases shared by the unit and acceptance suites."""

import numpy as np

from capmix.model import CAPMixNet, EncoderConfig, ProjectorConfig
from capmix.nn import (
    Tensor,
    batchnorm1d,
    bce_loss,
    check_gradients,
    check_parameter_gradients,
    conv1d,
    flatten,
    linear,
    maxpool1d,
    relu,
    softmax2,
)


def _weighted(out: Tensor, seed: int) -> Tensor:
    # a random projection turns any output into a scalar with generic gradients
    w = np.random.default_rng(seed).normal(size=out.shape)
    return (out * w).sum()


def op_cases(seed: int = 0) -> dict:
    """name -> (scalar function of tensors, input arrays)."""
    rng = np.random.default_rng(seed)
    x = rng.normal(size=(3, 2, 9))
    bn_in = rng.normal(size=(4, 3, 5))
    rm, rv = np.zeros(3), np.ones(3)
    probs = rng.uniform(0.05, 0.95, size=6)
    soft = rng.uniform(0, 1, size=6)
    return {
        "conv1d": (lambda a, w, b: _weighted(conv1d(a, w, b, 1, 1), 1),
                   [x, rng.normal(size=(4, 2, 4)), rng.normal(size=4)]),
        "conv1d_stride2": (lambda a, w: _weighted(conv1d(a, w, None, 2, 0), 2), [x, rng.normal(size=(3, 2, 3))]),
        "batchnorm_train": (lambda a, g, b: _weighted(batchnorm1d(a, g, b, rm.copy(), rv.copy(), True), 3),
                            [bn_in, rng.uniform(0.5, 1.5, 3), rng.normal(size=3)]),
        "batchnorm_train_2d": (lambda a, g, b: _weighted(batchnorm1d(a, g, b, rm.copy(), rv.copy(), True), 4),
                               [bn_in[:, :, 0], rng.uniform(0.5, 1.5, 3), rng.normal(size=3)]),
        "batchnorm_eval": (lambda a, g, b: _weighted(
            batchnorm1d(a, g, b, np.array([0.1, -0.2, 0.3]), np.array([0.5, 2.0, 1.5]), False), 5),
            [bn_in, rng.uniform(0.5, 1.5, 3), rng.normal(size=3)]),
        "relu": (lambda a: _weighted(relu(a), 6), [x]),
        "maxpool": (lambda a: _weighted(maxpool1d(a, 2, 2, 1), 7), [x]),
        "maxpool_overlap": (lambda a: _weighted(maxpool1d(a, 3, 1, 0), 8), [x]),
        "linear": (lambda a, w, b: _weighted(linear(a, w, b), 9),
                   [rng.normal(size=(4, 5)), rng.normal(size=(3, 5)), rng.normal(size=3)]),
        "flatten": (lambda a: _weighted(flatten(a), 10), [x]),
        "softmax2": (lambda q: _weighted(softmax2(q), 11), [rng.normal(size=(5, 2))]),
        "bce": (lambda p: bce_loss(p, soft), [probs]),
        "mix": (lambda a: _weighted(a * 0.3 + a[np.array([2, 0, 1])] * 0.7, 12), [x]),
    }


def op_errors(seed: int = 0) -> dict:
    return {name: check_gradients(fn, inputs) for name, (fn, inputs) in op_cases(seed).items()}


def composite_error(seed: int = 0, mix=None):
    """Encoder + projector + softmax + BCE on a small network, over every parameter and the input."""
    enc = EncoderConfig(channels=(3, 4, 5), dropout=0.0)
    model = CAPMixNet(2, 16, enc, ProjectorConfig(), seed)
    rng = np.random.default_rng([seed, 99])
    x = rng.normal(size=(4, 16, 2))
    y = np.array([0.0, 1.0, 0.5, 1.0])

    def loss(*_):
        return bce_loss(model.anomaly_probability(x, True, None, mix), y)

    params = check_parameter_gradients(loss, model.named_parameters())

    def loss_of_input(xt):
        return bce_loss(model.anomaly_probability(xt, True, None, mix), y)

    inputs = check_gradients(loss_of_input, [x])
    return params, inputs
