"""Network description, parameters, and the forward/backward passes.

A network is a ``NetworkSpec`` (immutable layer list plus input shape,
shape-checked at build time) and a ``ParameterSet`` (the float32 weight
and bias tensors, keyed by layer index). Keeping the two separate makes
auditing and serialization straightforward.
"""

from __future__ import annotations

from dataclasses import dataclass, field, fields
from typing import ClassVar, Dict, Iterator, List, Optional, Tuple, Union

import numpy as np

from . import ops


@dataclass(frozen=True)
class Conv1d:
    kind: ClassVar[str] = "conv1d"
    in_channels: int
    out_channels: int
    kernel_size: int
    stride: int = 1
    padding: int = 0

    def __post_init__(self) -> None:
        for name in ("in_channels", "out_channels", "kernel_size", "stride"):
            if getattr(self, name) < 1:
                raise ValueError(f"conv1d {name} must be >= 1")
        if self.padding < 0:
            raise ValueError("conv1d padding must be >= 0")


@dataclass(frozen=True)
class Dense:
    kind: ClassVar[str] = "dense"
    in_features: int
    out_features: int

    def __post_init__(self) -> None:
        if self.in_features < 1 or self.out_features < 1:
            raise ValueError("dense feature counts must be >= 1")


@dataclass(frozen=True)
class MaxPool1d:
    kind: ClassVar[str] = "maxpool1d"
    window: int
    stride: int

    def __post_init__(self) -> None:
        if self.window < 1 or self.stride < 1:
            raise ValueError("maxpool1d window and stride must be >= 1")


@dataclass(frozen=True)
class Dropout:
    kind: ClassVar[str] = "dropout"
    rate: float

    def __post_init__(self) -> None:
        if not 0.0 <= self.rate < 1.0:
            raise ValueError(f"dropout rate must be in [0, 1), got {self.rate}")


@dataclass(frozen=True)
class LeakyReLU:
    kind: ClassVar[str] = "leaky_relu"
    alpha: float = 0.1

    def __post_init__(self) -> None:
        if not 0.0 < self.alpha < 1.0:
            raise ValueError(f"leaky_relu alpha must be in (0, 1), got {self.alpha}")


@dataclass(frozen=True)
class Flatten:
    kind: ClassVar[str] = "flatten"


@dataclass(frozen=True)
class Softmax:
    kind: ClassVar[str] = "softmax"


Layer = Union[Conv1d, Dense, MaxPool1d, Dropout, LeakyReLU, Flatten, Softmax]

_LAYER_KINDS = {cls.kind: cls for cls in (Conv1d, Dense, MaxPool1d, Dropout, LeakyReLU, Flatten, Softmax)}


def layer_to_dict(layer: Layer) -> dict:
    d = {"kind": layer.kind}
    d.update({f.name: getattr(layer, f.name) for f in fields(layer)})
    return d


def layer_from_dict(d: dict) -> Layer:
    kind = d.get("kind")
    if kind not in _LAYER_KINDS:
        raise ValueError(f"unknown layer kind {kind!r}")
    args = {k: v for k, v in d.items() if k != "kind"}
    return _LAYER_KINDS[kind](**args)


# Shape bookkeeping: sequence activations are ('seq', channels, length),
# flattened activations are ('flat', features).
Shape = Tuple


def _advance_shape(shape: Shape, layer: Layer, index: int) -> Shape:
    if isinstance(layer, Conv1d):
        if shape[0] != "seq":
            raise ValueError(f"layer {index} (conv1d) needs a sequence input, got {shape}")
        _, c, length = shape
        if c != layer.in_channels:
            raise ValueError(
                f"layer {index} (conv1d): input shape {(c, length)} does not match "
                f"expected in_channels {layer.in_channels}"
            )
        out_len = (length + 2 * layer.padding - layer.kernel_size) // layer.stride + 1
        if out_len < 1:
            raise ValueError(
                f"layer {index} (conv1d): kernel {layer.kernel_size} does not fit "
                f"input length {length} with padding {layer.padding}"
            )
        return ("seq", layer.out_channels, out_len)
    if isinstance(layer, MaxPool1d):
        if shape[0] != "seq":
            raise ValueError(f"layer {index} (maxpool1d) needs a sequence input, got {shape}")
        _, c, length = shape
        if layer.window > length:
            raise ValueError(
                f"layer {index} (maxpool1d): window {layer.window} exceeds length {length}"
            )
        out_len = (length - layer.window) // layer.stride + 1
        if out_len < 1:
            raise ValueError(f"layer {index} (maxpool1d): pooled length < 1")
        return ("seq", c, out_len)
    if isinstance(layer, Flatten):
        if shape[0] != "seq":
            raise ValueError(f"layer {index} (flatten) needs a sequence input, got {shape}")
        return ("flat", shape[1] * shape[2])
    if isinstance(layer, Dense):
        if shape[0] != "flat":
            raise ValueError(f"layer {index} (dense) needs a flat input, got {shape}")
        if shape[1] != layer.in_features:
            raise ValueError(
                f"layer {index} (dense): input has {shape[1]} features but the layer "
                f"expects {layer.in_features}"
            )
        return ("flat", layer.out_features)
    # dropout / leaky_relu / softmax are shape-preserving
    return shape


@dataclass(frozen=True)
class NetworkSpec:
    """Ordered layer stack over a (channels, length) input, shape-checked."""

    input_shape: Tuple[int, int]
    layers: Tuple[Layer, ...]
    _shapes: Tuple[Shape, ...] = field(init=False, repr=False, compare=False)

    def __post_init__(self) -> None:
        c, length = self.input_shape
        if c < 1 or length < 1:
            raise ValueError(f"input shape must be positive, got {self.input_shape}")
        shapes: List[Shape] = [("seq", c, length)]
        for i, layer in enumerate(self.layers):
            shapes.append(_advance_shape(shapes[-1], layer, i))
        object.__setattr__(self, "_shapes", tuple(shapes))

    @property
    def output_shape(self) -> Shape:
        return self._shapes[-1]

    @property
    def output_size(self) -> int:
        out = self.output_shape
        return out[1] if out[0] == "flat" else out[1] * out[2]

    def shape_before(self, index: int) -> Shape:
        return self._shapes[index]

    def parametric_layers(self) -> Iterator[Tuple[int, Layer]]:
        for i, layer in enumerate(self.layers):
            if isinstance(layer, (Conv1d, Dense)):
                yield i, layer

    def to_dict(self) -> dict:
        return {
            "input": list(self.input_shape),
            "layers": [layer_to_dict(layer) for layer in self.layers],
        }

    @classmethod
    def from_dict(cls, d: dict) -> "NetworkSpec":
        return cls(
            input_shape=tuple(d["input"]),
            layers=tuple(layer_from_dict(x) for x in d["layers"]),
        )


class ParameterSet:
    """Weight/bias tensors keyed by layer index; also used for gradients."""

    def __init__(self, by_layer: Dict[int, Dict[str, np.ndarray]]):
        self.by_layer = by_layer

    @property
    def total_count(self) -> int:
        return sum(t.size for tensors in self.by_layer.values() for t in tensors.values())

    def iter_tensors(self) -> Iterator[Tuple[int, str, np.ndarray]]:
        """Deterministic order: ascending layer index, weight before bias."""
        for index in sorted(self.by_layer):
            tensors = self.by_layer[index]
            for name in ("weight", "bias"):
                if name in tensors:
                    yield index, name, tensors[name]

    def copy(self) -> "ParameterSet":
        return ParameterSet(
            {i: {n: t.copy() for n, t in tensors.items()} for i, tensors in self.by_layer.items()}
        )

    def astype(self, dtype) -> "ParameterSet":
        return ParameterSet(
            {i: {n: t.astype(dtype) for n, t in tensors.items()} for i, tensors in self.by_layer.items()}
        )

    def congruent_with(self, other: "ParameterSet") -> bool:
        mine = [(i, n, t.shape) for i, n, t in self.iter_tensors()]
        theirs = [(i, n, t.shape) for i, n, t in other.iter_tensors()]
        return mine == theirs

    def allclose(self, other: "ParameterSet", rtol: float = 0.0, atol: float = 0.0) -> bool:
        if not self.congruent_with(other):
            return False
        return all(
            np.allclose(a, b, rtol=rtol, atol=atol)
            for (_, _, a), (_, _, b) in zip(self.iter_tensors(), other.iter_tensors())
        )

    def equal(self, other: "ParameterSet") -> bool:
        """Bit-exact equality, shape and value."""
        if not self.congruent_with(other):
            return False
        return all(
            np.array_equal(a, b)
            for (_, _, a), (_, _, b) in zip(self.iter_tensors(), other.iter_tensors())
        )

    def zeros_like(self) -> "ParameterSet":
        return ParameterSet(
            {
                i: {n: np.zeros_like(t) for n, t in tensors.items()}
                for i, tensors in self.by_layer.items()
            }
        )


# Gradients share the container and its congruence invariant.
GradientSet = ParameterSet


def init_params(spec: NetworkSpec, rng: np.random.Generator, dtype=np.float32) -> ParameterSet:
    """He-scaled normal weights (std = sqrt(2 / fan_in)), zero biases.

    Draws happen in layer order from the single supplied generator, so a
    given seed always produces the same parameters.
    """
    by_layer: Dict[int, Dict[str, np.ndarray]] = {}
    for index, layer in spec.parametric_layers():
        if isinstance(layer, Conv1d):
            fan_in = layer.in_channels * layer.kernel_size
            wshape = (layer.out_channels, layer.in_channels, layer.kernel_size)
            bshape = (layer.out_channels,)
        else:
            fan_in = layer.in_features
            wshape = (layer.out_features, layer.in_features)
            bshape = (layer.out_features,)
        std = float(np.sqrt(2.0 / fan_in))
        weight = (rng.standard_normal(wshape) * std).astype(dtype)
        by_layer[index] = {"weight": weight, "bias": np.zeros(bshape, dtype=dtype)}
    return ParameterSet(by_layer)


def check_input(spec: NetworkSpec, x: np.ndarray) -> Tuple[np.ndarray, bool]:
    x3, batched = ops._as_batched(x, 2)
    expected = tuple(spec.input_shape)
    if x3.shape[1:] != expected:
        raise ValueError(
            f"network expects input shape {expected}, got {tuple(x3.shape[1:])}"
        )
    return x3, batched


def forward(
    spec: NetworkSpec,
    params: ParameterSet,
    x: np.ndarray,
    *,
    train: bool = False,
    rng: Optional[np.random.Generator] = None,
) -> Tuple[np.ndarray, Optional[list]]:
    """Run the stack. Returns (output, tape); tape is None in infer mode.

    Probabilities out of a softmax head are float64 (see ops.softmax);
    all intermediate activations stay in the parameter dtype.
    """
    x3, batched = check_input(spec, x)
    if train and rng is None and any(isinstance(l, Dropout) for l in spec.layers):
        raise ValueError("train-mode forward through dropout needs a generator")
    tape: Optional[list] = [] if train else None
    h = x3
    for index, layer in enumerate(spec.layers):
        cache = None
        if isinstance(layer, Conv1d):
            p = params.by_layer[index]
            cache = h
            h = ops.conv1d_forward(h, p["weight"], p["bias"], layer.stride, layer.padding)
        elif isinstance(layer, Dense):
            p = params.by_layer[index]
            cache = h
            h = ops.dense_forward(h, p["weight"], p["bias"])
        elif isinstance(layer, MaxPool1d):
            shape = h.shape
            h, argmax = ops.maxpool1d_forward(h, layer.window, layer.stride)
            cache = (shape, argmax)
        elif isinstance(layer, Dropout):
            h, mask = ops.dropout_apply(h, layer.rate, "train" if train else "infer", rng)
            cache = mask
        elif isinstance(layer, LeakyReLU):
            cache = h
            h = ops.leaky_relu(h, layer.alpha)
        elif isinstance(layer, Flatten):
            cache = h.shape
            h = h.reshape(h.shape[0], -1)
        elif isinstance(layer, Softmax):
            h = ops.softmax(h)
            cache = h
        if tape is not None:
            tape.append(cache)
    if tape is not None:
        tape.append(h)  # final output, needed to seed the loss gradient
    return (h if batched else h[0]), tape


def backward(
    spec: NetworkSpec,
    params: ParameterSet,
    tape: Optional[list],
    labels: np.ndarray,
) -> GradientSet:
    """Gradients of the mean clamped cross-entropy w.r.t. every parameter.

    ``tape`` must come from a train-mode forward on the same spec/params.
    """
    if tape is None:
        raise ValueError("backward requires the tape from a train-mode forward")
    if len(tape) != len(spec.layers) + 1:
        raise ValueError("tape does not match the network (stale or truncated forward?)")
    labels = np.atleast_1d(np.asarray(labels))
    output = tape[-1]
    if spec.layers and isinstance(spec.layers[-1], Softmax):
        # Fused softmax + cross-entropy head: (p - onehot) / batch. The
        # composition through the clamped log would zero out gradients of
        # saturated-but-wrong predictions; the fused form keeps their
        # corrective signal while still vanishing on exact correct hits.
        b = output.shape[0]
        grad = output.copy()
        grad[np.arange(b), labels] -= 1.0
        grad /= b
        start = len(spec.layers) - 2
    else:
        grad = ops.cross_entropy_grad(output, labels)
        start = len(spec.layers) - 1
    grads: Dict[int, Dict[str, np.ndarray]] = {}
    dtype = None
    for index in range(start, -1, -1):
        layer = spec.layers[index]
        cache = tape[index]
        if isinstance(layer, Softmax):
            grad = ops.softmax_backward(cache, grad)
        elif isinstance(layer, Flatten):
            grad = grad.reshape(cache)
        elif isinstance(layer, LeakyReLU):
            grad = ops.leaky_relu_backward(cache, grad.astype(cache.dtype, copy=False), layer.alpha)
        elif isinstance(layer, Dropout):
            if cache is not None:
                grad = ops.dropout_backward(cache, layer.rate, grad)
        elif isinstance(layer, MaxPool1d):
            shape, argmax = cache
            grad = ops.maxpool1d_backward(shape, argmax, grad)
        elif isinstance(layer, Dense):
            p = params.by_layer[index]
            dtype = p["weight"].dtype
            grad = grad.astype(dtype, copy=False)
            grad, dw, db = ops.dense_backward(cache, p["weight"], grad)
            grads[index] = {"weight": dw, "bias": db}
        elif isinstance(layer, Conv1d):
            p = params.by_layer[index]
            dtype = p["weight"].dtype
            grad = grad.astype(dtype, copy=False)
            grad, dw, db = ops.conv1d_backward(cache, p["weight"], grad, layer.stride, layer.padding)
            grads[index] = {"weight": dw, "bias": db}
    return GradientSet(grads)
