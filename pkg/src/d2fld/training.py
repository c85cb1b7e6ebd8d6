"""Training loop: seeded SGD with momentum, validation-plateau stopping.

Training is single-threaded and consumes one seeded generator in a fixed
order (init, then per-epoch shuffles and dropout masks), so a given seed,
data order, and hyperparameter set always produces the same parameters,
bit for bit.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import asdict, dataclass
from typing import Iterable, List, Optional, Tuple

import numpy as np

from .architectures import ModelConfig, config_digest
from .data import LabeledDataset
from .landmarks import LandmarkFrame, assemble_feature
from .modelfile import ModelArtifact, make_metadata
from .net import network, ops, optim


@dataclass(frozen=True)
class TrainConfig:
    optimizer: str = "adam"  # "adam" | "sgd"
    lr: float = 2e-3
    momentum: float = 0.9
    batch_size: int = 64
    max_epochs: int = 120
    patience: int = 12
    min_epochs: int = 30
    seed: int = 42
    head_init_scale: float = 0.1
    dc_blind_init: bool = True

    def __post_init__(self) -> None:
        if self.optimizer not in ("adam", "sgd"):
            raise ValueError(f"optimizer must be 'adam' or 'sgd', got {self.optimizer!r}")
        if self.lr < 0:
            raise ValueError("lr must be >= 0")
        if self.batch_size < 1 or self.max_epochs < 1 or self.patience < 1:
            raise ValueError("batch_size, max_epochs, and patience must be >= 1")
        if self.min_epochs < 1:
            raise ValueError("min_epochs must be >= 1")
        if self.head_init_scale <= 0:
            raise ValueError("head_init_scale must be > 0")


@dataclass(frozen=True)
class EpochStats:
    epoch: int
    train_loss: float
    train_accuracy: float
    val_accuracy: float


@dataclass
class TrainRun:
    config_digest: str
    seed: int
    history: List[EpochStats]
    stop_reason: str  # "plateau" | "max_epochs"
    best_epoch: int
    best_val_accuracy: float
    artifact: ModelArtifact

    def to_json_obj(self) -> dict:
        return {
            "config_digest": self.config_digest,
            "seed": self.seed,
            "stop_reason": self.stop_reason,
            "best_epoch": self.best_epoch,
            "best_val_accuracy": self.best_val_accuracy,
            "history": [asdict(h) for h in self.history],
        }


def feature_mode_for(spec: network.NetworkSpec) -> bool:
    """True when the network wants the 134-value (67-point) input."""
    channels, length = spec.input_shape
    if channels != 2 or length not in (67, 68):
        raise ValueError(
            f"network input {spec.input_shape} is not a landmark feature shape "
            "(2 channels x 67 or 68 points)"
        )
    return length == 67


def stack_features(
    frames: Iterable[LandmarkFrame], *, compat_134: bool = False
) -> Tuple[np.ndarray, np.ndarray]:
    """Scale and assemble frames into (N, 2, L) float32 plus labels."""
    xs = []
    labels = []
    for frame in frames:
        xs.append(assemble_feature(frame, compat_134=compat_134).channel_first())
        labels.append(frame.label)
    if not xs:
        length = 67 if compat_134 else 68
        return np.zeros((0, 2, length), dtype=np.float32), np.zeros(0, dtype=np.int64)
    return np.stack(xs), np.asarray(labels, dtype=np.int64)


def run_digest(spec: network.NetworkSpec, config: Optional[ModelConfig], hyper: TrainConfig) -> str:
    ident = {
        "model": config_digest(config) if config is not None else spec.to_dict(),
        "train": asdict(hyper),
    }
    canon = json.dumps(ident, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(canon.encode("utf-8")).hexdigest()[:16]


def _accuracy(spec, params, x, labels, batch=512) -> float:
    correct = 0
    for i in range(0, len(x), batch):
        out, _ = network.forward(spec, params, x[i : i + batch])
        correct += int((out.argmax(axis=1) == labels[i : i + batch]).sum())
    return correct / len(x)


def train(
    spec: network.NetworkSpec,
    train_ds: LabeledDataset,
    val_ds: LabeledDataset,
    hyper: TrainConfig = TrainConfig(),
    *,
    model_config: Optional[ModelConfig] = None,
    compat_134: Optional[bool] = None,
) -> TrainRun:
    """Train until the validation accuracy plateaus or max_epochs.

    Returns the parameters of the best validation epoch. The train and
    validation sets must be non-empty and subject-disjoint. The feature
    mode follows the network input; passing ``compat_134`` explicitly
    cross-checks it against the network before the first epoch.
    """
    if len(train_ds) == 0 or len(val_ds) == 0:
        raise ValueError("train and validation datasets must be non-empty")
    shared = set(train_ds.subjects()) & set(val_ds.subjects())
    if shared:
        raise ValueError(f"train/validation sets share subjects: {sorted(shared)}")
    spec_mode = feature_mode_for(spec)
    if compat_134 is not None and compat_134 != spec_mode:
        want = 134 if compat_134 else 136
        have = 134 if spec_mode else 136
        raise ValueError(
            f"feature mode supplies {want} values but the network input takes {have}"
        )

    x_train, y_train = stack_features(train_ds.frames, compat_134=spec_mode)
    x_val, y_val = stack_features(val_ds.frames, compat_134=spec_mode)

    rng = np.random.default_rng(np.uint64(hyper.seed))
    params = network.init_params(spec, rng)
    if params.by_layer:
        if hyper.dc_blind_init:
            # Zero-sum the first layer's kernels so its response ignores
            # the large common-mode component of [0, 1] features at init.
            first = min(params.by_layer)
            w = params.by_layer[first]["weight"]
            w -= w.mean(axis=-1, keepdims=True)
        if hyper.head_init_scale != 1.0:
            # Damp the classifier head so the run starts from near-uniform
            # predictions instead of confident init noise.
            head = max(params.by_layer)
            params.by_layer[head]["weight"] *= np.float32(hyper.head_init_scale)
    sgd_velocity = params.zeros_like()
    adam_state = optim.AdamState.for_params(params)

    history: List[EpochStats] = []
    best_params = params.copy()
    best_val = -1.0
    best_epoch = 0
    stall = 0
    stop_reason = "max_epochs"
    n = len(x_train)

    for epoch in range(1, hyper.max_epochs + 1):
        perm = rng.permutation(n)
        loss_sum = 0.0
        correct = 0
        for start in range(0, n, hyper.batch_size):
            idx = perm[start : start + hyper.batch_size]
            xb, yb = x_train[idx], y_train[idx]
            out, tape = network.forward(spec, params, xb, train=True, rng=rng)
            loss_sum += ops.cross_entropy_batch(out, yb) * len(idx)
            correct += int((out.argmax(axis=1) == yb).sum())
            grads = network.backward(spec, params, tape, yb)
            if hyper.optimizer == "adam":
                optim.adam_step(params, grads, hyper.lr, adam_state)
            else:
                optim.sgd_step(params, grads, hyper.lr, hyper.momentum, sgd_velocity)
        val_acc = _accuracy(spec, params, x_val, y_val)
        history.append(
            EpochStats(
                epoch=epoch,
                train_loss=loss_sum / n,
                train_accuracy=correct / n,
                val_accuracy=val_acc,
            )
        )
        if val_acc > best_val:
            best_val = val_acc
            best_epoch = epoch
            best_params = params.copy()
            stall = 0
        else:
            stall += 1
            if stall >= hyper.patience and epoch >= hyper.min_epochs:
                stop_reason = "plateau"
                break

    metadata = (
        make_metadata(model_config, hyper.seed, epochs=len(history))
        if model_config is not None
        else {"seed": hyper.seed, "epochs": len(history), "created": None}
    )
    artifact = ModelArtifact(spec=spec, params=best_params, metadata=metadata)
    return TrainRun(
        config_digest=run_digest(spec, model_config, hyper),
        seed=hyper.seed,
        history=history,
        stop_reason=stop_reason,
        best_epoch=best_epoch,
        best_val_accuracy=best_val,
        artifact=artifact,
    )
