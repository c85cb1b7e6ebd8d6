"""Classifier architectures and their size accounting.

Two variants share the landmark-feature input:

* ``d2cnn_fld``: four conv blocks (conv1d, LeakyReLU 0.1, max-pool 2/2,
  dropout) followed by a dense softmax head. The ``budgeted`` preset uses
  filter counts (16, 24, 24, 24), kernel 3, stride 1, same padding, which
  keeps the serialized float32 artifact within the 75 KB budget. The
  ``literal_alg1`` preset uses widths (100, 1024, 1024, 1024); it blows
  the budget by orders of magnitude and exists to make that measurable.
* ``d2mlp_fld``: the two-hidden-layer MLP baseline, sized to fit 0.1 MB.

The landmark sequence is treated as length 67/68 with 2 channels (x, y),
which preserves landmark adjacency for the 1-D convolutions.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import asdict, dataclass
from typing import Optional, Tuple

from .net.network import (
    Conv1d,
    Dense,
    Dropout,
    Flatten,
    LeakyReLU,
    MaxPool1d,
    NetworkSpec,
    Softmax,
)

VARIANTS = ("d2cnn_fld", "d2mlp_fld")
PRESETS = ("budgeted", "literal_alg1")

PRESET_FILTERS = {
    "budgeted": (16, 24, 24, 24),
    "literal_alg1": (100, 1024, 1024, 1024),
}

# Serialized-artifact budgets in bytes: 75 KB for the CNN, 0.1 MB for the
# MLP baseline.
SIZE_BUDGET = {"d2cnn_fld": 76_800, "d2mlp_fld": 102_400}

CLASS_COUNT = 2
INPUT_CHANNELS = 2


@dataclass(frozen=True)
class ModelConfig:
    variant: str = "d2cnn_fld"
    preset: str = "budgeted"
    input_points: int = 68
    filters: Optional[Tuple[int, int, int, int]] = None
    kernel_size: int = 3
    dropout_first: float = 0.254
    dropout_rest: float = 0.20
    alpha: float = 0.1
    hidden: Tuple[int, int] = (100, 100)
    mlp_dropout: float = 0.25

    def __post_init__(self) -> None:
        if self.variant not in VARIANTS:
            raise ValueError(f"variant must be one of {VARIANTS}, got {self.variant!r}")
        if self.preset not in PRESETS:
            raise ValueError(f"preset must be one of {PRESETS}, got {self.preset!r}")
        if self.input_points not in (67, 68):
            raise ValueError(f"input_points must be 67 or 68, got {self.input_points}")
        if self.kernel_size < 1:
            raise ValueError("kernel_size must be >= 1")
        if self.filters is not None and len(self.filters) != 4:
            raise ValueError("filters must list the 4 block widths")

    def resolved_filters(self) -> Tuple[int, int, int, int]:
        return tuple(self.filters) if self.filters is not None else PRESET_FILTERS[self.preset]

    def to_json_obj(self) -> dict:
        obj = asdict(self)
        obj["filters"] = list(self.resolved_filters())
        obj["hidden"] = list(self.hidden)
        return obj

    @classmethod
    def from_json_obj(cls, obj: dict) -> "ModelConfig":
        kwargs = dict(obj)
        if kwargs.get("filters") is not None:
            kwargs["filters"] = tuple(kwargs["filters"])
        if kwargs.get("hidden") is not None:
            kwargs["hidden"] = tuple(kwargs["hidden"])
        return cls(**kwargs)


def config_digest(config: ModelConfig) -> str:
    canon = json.dumps(config.to_json_obj(), sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(canon.encode("utf-8")).hexdigest()[:16]


def build_d2cnn_fld(config: ModelConfig) -> NetworkSpec:
    """Conv block stack: [conv, LeakyReLU, pool, dropout] x 4, then
    flatten, dense, softmax over the 2 classes."""
    filters = config.resolved_filters()
    k = config.kernel_size
    pad = (k - 1) // 2
    layers = []
    in_ch = INPUT_CHANNELS
    length = config.input_points
    for block, out_ch in enumerate(filters):
        rate = config.dropout_first if block == 0 else config.dropout_rest
        layers += [
            Conv1d(in_ch, out_ch, k, 1, pad),
            LeakyReLU(config.alpha),
            MaxPool1d(2, 2),
            Dropout(rate),
        ]
        length = length + 2 * pad - k + 1
        length = (length - 2) // 2 + 1
        in_ch = out_ch
    layers += [Flatten(), Dense(in_ch * length, CLASS_COUNT), Softmax()]
    return NetworkSpec((INPUT_CHANNELS, config.input_points), tuple(layers))


def build_d2mlp_fld(config: ModelConfig) -> NetworkSpec:
    """Baseline MLP: two LeakyReLU hidden layers with dropout, softmax head."""
    h1, h2 = config.hidden
    in_features = INPUT_CHANNELS * config.input_points
    layers = (
        Flatten(),
        Dense(in_features, h1),
        LeakyReLU(config.alpha),
        Dropout(config.mlp_dropout),
        Dense(h1, h2),
        LeakyReLU(config.alpha),
        Dropout(config.mlp_dropout),
        Dense(h2, CLASS_COUNT),
        Softmax(),
    )
    return NetworkSpec((INPUT_CHANNELS, config.input_points), layers)


def build_model(config: ModelConfig) -> NetworkSpec:
    if config.variant == "d2cnn_fld":
        return build_d2cnn_fld(config)
    return build_d2mlp_fld(config)


def count_params(spec: NetworkSpec) -> int:
    """Exact weight + bias element count, straight from the layer specs."""
    total = 0
    for _, layer in spec.parametric_layers():
        if isinstance(layer, Conv1d):
            total += layer.out_channels * layer.in_channels * layer.kernel_size
            total += layer.out_channels
        else:
            total += layer.out_features * (layer.in_features + 1)
    return total
