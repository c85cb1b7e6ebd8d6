"""Single-frame prediction and per-category evaluation reports."""

from __future__ import annotations

from dataclasses import asdict, dataclass
from typing import Dict, Iterable, List, Tuple

import numpy as np

from .data import LabeledDataset
from .landmarks import CATEGORIES, LABEL_DROWSY, LandmarkFrame, assemble_feature
from .modelfile import ModelArtifact
from .net import network
from .training import feature_mode_for, stack_features


def predict(artifact: ModelArtifact, frame: LandmarkFrame) -> Tuple[np.ndarray, int]:
    """Probabilities (sum 1 within 1e-9) and the predicted class.

    Class 0 is alert, class 1 drowsy; an exact tie resolves to alert so
    ties never raise alarms.
    """
    compat = feature_mode_for(artifact.spec)
    x = assemble_feature(frame, compat_134=compat).channel_first()
    probs, _ = network.forward(artifact.spec, artifact.params, x)
    return probs, int(np.argmax(probs))


@dataclass(frozen=True)
class CategoryResult:
    accuracy: float  # percent
    tp: int
    fp: int
    tn: int
    fn: int
    frames: int


@dataclass(frozen=True)
class EvalReport:
    categories: Dict[str, CategoryResult]
    overall_accuracy: float
    frame_count: int

    def to_json_obj(self) -> dict:
        return {
            "categories": {name: asdict(r) for name, r in self.categories.items()},
            "overall_accuracy": self.overall_accuracy,
            "frame_count": self.frame_count,
        }

    def to_text(self) -> str:
        width = max(len(c) for c in CATEGORIES) + 2
        lines = [f"{'Category':<{width}} {'Accuracy(%)':>12} {'Frames':>8}"]
        lines.append("-" * (width + 22))
        for name in CATEGORIES:
            if name in self.categories:
                r = self.categories[name]
                lines.append(f"{name:<{width}} {r.accuracy:>12.2f} {r.frames:>8}")
        lines.append("-" * (width + 22))
        lines.append(f"{'All':<{width}} {self.overall_accuracy:>12.2f} {self.frame_count:>8}")
        return "\n".join(lines)

    def to_csv(self) -> str:
        out = ["category,accuracy,tp,fp,tn,fn,frames"]
        for name in CATEGORIES:
            if name in self.categories:
                r = self.categories[name]
                out.append(f"{name},{r.accuracy:.4f},{r.tp},{r.fp},{r.tn},{r.fn},{r.frames}")
        out.append(f"all,{self.overall_accuracy:.4f},,,,,{self.frame_count}")
        return "\n".join(out) + "\n"


def overall_accuracy(per_category: Iterable[float]) -> float:
    """The report aggregation rule: unweighted mean of the category
    accuracies (this reproduces the published 'All' row exactly, which a
    frame-weighted mean does not)."""
    values = list(per_category)
    if not values:
        raise ValueError("no category accuracies to aggregate")
    return float(np.mean(values))


def evaluate(artifact: ModelArtifact, eval_ds: LabeledDataset) -> EvalReport:
    """Per-category accuracy; empty categories are omitted, not zeroed."""
    if len(eval_ds) == 0:
        raise ValueError("evaluation dataset is empty")
    compat = feature_mode_for(artifact.spec)
    results: Dict[str, CategoryResult] = {}
    for category in CATEGORIES:
        frames = [f for f in eval_ds.frames if f.category == category]
        if not frames:
            continue
        x, labels = stack_features(frames, compat_134=compat)
        preds = _predict_batch(artifact, x)
        positive = labels == LABEL_DROWSY
        predicted_pos = preds == LABEL_DROWSY
        tp = int((positive & predicted_pos).sum())
        tn = int((~positive & ~predicted_pos).sum())
        fp = int((~positive & predicted_pos).sum())
        fn = int((positive & ~predicted_pos).sum())
        results[category] = CategoryResult(
            accuracy=100.0 * (tp + tn) / len(frames),
            tp=tp,
            fp=fp,
            tn=tn,
            fn=fn,
            frames=len(frames),
        )
    return EvalReport(
        categories=results,
        overall_accuracy=overall_accuracy(r.accuracy for r in results.values()),
        frame_count=sum(r.frames for r in results.values()),
    )


def _predict_batch(artifact: ModelArtifact, x: np.ndarray, batch: int = 512) -> np.ndarray:
    preds: List[np.ndarray] = []
    for i in range(0, len(x), batch):
        out, _ = network.forward(artifact.spec, artifact.params, x[i : i + batch])
        preds.append(out.argmax(axis=1))
    return np.concatenate(preds) if preds else np.zeros(0, dtype=np.int64)
