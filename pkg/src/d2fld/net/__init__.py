"""Minimal dense/convolutional network engine with manual backprop.

Tensors are plain numpy arrays (row-major, float32 on the production
path). The engine covers exactly what the landmark classifiers need:
conv1d, dense, maxpool1d, inverted dropout, LeakyReLU, softmax, flatten,
cross-entropy, and momentum SGD.
"""

from .network import (
    Conv1d,
    Dense,
    Dropout,
    Flatten,
    GradientSet,
    LeakyReLU,
    Layer,
    MaxPool1d,
    NetworkSpec,
    ParameterSet,
    Softmax,
    backward,
    forward,
    init_params,
    layer_from_dict,
    layer_to_dict,
)
from .ops import (
    conv1d_forward,
    cross_entropy,
    cross_entropy_batch,
    dense_forward,
    dropout_apply,
    leaky_relu,
    maxpool1d_forward,
    softmax,
)
from .optim import sgd_step

__all__ = [
    "Conv1d",
    "Dense",
    "Dropout",
    "Flatten",
    "GradientSet",
    "Layer",
    "LeakyReLU",
    "MaxPool1d",
    "NetworkSpec",
    "ParameterSet",
    "Softmax",
    "backward",
    "conv1d_forward",
    "cross_entropy",
    "cross_entropy_batch",
    "dense_forward",
    "dropout_apply",
    "forward",
    "init_params",
    "layer_from_dict",
    "layer_to_dict",
    "leaky_relu",
    "maxpool1d_forward",
    "sgd_step",
    "softmax",
]
