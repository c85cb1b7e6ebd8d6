"""Landmark data model and the feature pipeline.

A frame is one face observation: 68 (x, y) pixel coordinates in the
standard 68-point scheme (jaw 0-16, brows 17-26, nose 27-35, right eye
36-41, left eye 42-47, mouth 48-67), a drowsiness label, and recording
provenance. Features are per-frame min-max scaled coordinates arranged
as a length-68 sequence with an x and a y channel.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import List, Literal, Tuple

import numpy as np

CATEGORIES = (
    "with_glasses",
    "without_glasses",
    "with_sunglasses",
    "night_with_glasses",
    "night_without_glasses",
)

POINT_COUNT = 68
LABEL_ALERT = 0
LABEL_DROWSY = 1

RIGHT_EYE = tuple(range(36, 42))
LEFT_EYE = tuple(range(42, 48))

Split = Literal["train", "eval"]


def _mirror_pairs() -> Tuple[Tuple[int, int], ...]:
    pairs = []
    pairs += [(i, 16 - i) for i in range(8)]            # jaw
    pairs += [(17 + i, 26 - i) for i in range(5)]       # brows
    pairs += [(31, 35), (32, 34)]                       # nostrils
    pairs += [(36, 45), (37, 44), (38, 43), (39, 42), (40, 47), (41, 46)]  # eyes
    pairs += [(48, 54), (49, 53), (50, 52), (55, 59), (56, 58)]            # outer mouth
    pairs += [(60, 64), (61, 63), (65, 67)]             # inner mouth
    return tuple(pairs)


def mirror_index_map() -> np.ndarray:
    """Index permutation that relabels landmarks after a horizontal flip."""
    perm = np.arange(POINT_COUNT)
    for a, b in _mirror_pairs():
        perm[a], perm[b] = b, a
    return perm

MIRROR_MAP = mirror_index_map()


class FrameValidationError(ValueError):
    """Raised when a raw record violates the frame invariants.

    Carries every violation, not just the first one found.
    """

    def __init__(self, violations: List[str]):
        self.violations = list(violations)
        super().__init__("; ".join(self.violations))


@dataclass(frozen=True)
class LandmarkFrame:
    subject: str
    category: str
    split: str
    frame_index: int
    label: int
    points: np.ndarray = field(compare=False)  # (68, 2) float64

    def __eq__(self, other) -> bool:
        if not isinstance(other, LandmarkFrame):
            return NotImplemented
        return (
            (self.subject, self.category, self.split, self.frame_index, self.label)
            == (other.subject, other.category, other.split, other.frame_index, other.label)
            and np.array_equal(self.points, other.points)
        )

    def with_points(self, points: np.ndarray) -> "LandmarkFrame":
        return replace(self, points=points)


@dataclass(frozen=True)
class FeatureTensor:
    """Scaled coordinates: (sequence, 2) float32, every value in [0, 1]."""

    values: np.ndarray

    @property
    def sequence_length(self) -> int:
        return self.values.shape[0]

    def channel_first(self) -> np.ndarray:
        """(2, sequence) view for the network input."""
        return np.ascontiguousarray(self.values.T)


def validate_frame(raw: dict) -> LandmarkFrame:
    """Build a LandmarkFrame from a raw record, or report every violation."""
    violations: List[str] = []

    subject = raw.get("subject")
    if not isinstance(subject, str) or not subject:
        violations.append("subject must be a non-empty string")
        subject = str(subject)

    category = raw.get("category")
    if category not in CATEGORIES:
        violations.append(f"unknown category {category!r} (expected one of {', '.join(CATEGORIES)})")

    split = raw.get("split")
    if split not in ("train", "eval"):
        violations.append(f"split must be 'train' or 'eval', got {split!r}")

    frame_index = raw.get("frame")
    if not isinstance(frame_index, int) or isinstance(frame_index, bool) or frame_index < 0:
        violations.append(f"frame must be an integer >= 0, got {frame_index!r}")
        frame_index = -1

    label = raw.get("label")
    if label not in (LABEL_ALERT, LABEL_DROWSY) or isinstance(label, bool):
        violations.append(f"label must be 0 or 1, got {label!r}")
        label = -1

    points = raw.get("points")
    arr = None
    try:
        arr = np.asarray(points, dtype=np.float64)
    except (TypeError, ValueError):
        violations.append("points must be an array of [x, y] pairs")
    if arr is not None:
        if arr.ndim != 2 or arr.shape[1] != 2:
            violations.append(f"points must be pairs, got array shape {arr.shape}")
            arr = None
        elif arr.shape[0] != POINT_COUNT:
            violations.append(f"expected {POINT_COUNT} points, got {arr.shape[0]}")
        elif not np.isfinite(arr).all():
            bad = sorted(set(np.argwhere(~np.isfinite(arr))[:, 0].tolist()))
            listed = ", ".join(str(i) for i in bad)
            violations.append(f"non-finite coordinate at point {listed}")

    if violations:
        raise FrameValidationError(violations)

    arr.setflags(write=False)
    return LandmarkFrame(
        subject=subject,
        category=category,
        split=split,
        frame_index=frame_index,
        label=int(label),
        points=arr,
    )


def min_max_scale(frame: LandmarkFrame) -> FeatureTensor:
    """Per-frame, per-axis scaling of coordinates into [0, 1].

    A degenerate axis (max == min) maps every coordinate on that axis
    to 0.5, the midpoint of the target range.
    """
    return FeatureTensor(values=_scale_points(frame.points))


def _scale_points(points: np.ndarray) -> np.ndarray:
    lo = points.min(axis=0)
    hi = points.max(axis=0)
    span = hi - lo
    out = np.empty_like(points)
    for axis in range(2):
        if span[axis] == 0.0:
            out[:, axis] = 0.5
        else:
            out[:, axis] = (points[:, axis] - lo[axis]) / span[axis]
    return out.astype(np.float32)


def assemble_feature(frame: LandmarkFrame, *, compat_134: bool = False) -> FeatureTensor:
    """Scaled frame as the network input sequence.

    The default keeps all 68 landmarks (136 values). ``compat_134`` drops
    the final landmark so the input is the literal 67*2 = 134 values.
    """
    feature = min_max_scale(frame)
    if compat_134:
        return FeatureTensor(values=feature.values[:-1])
    return feature


def eye_aspect_ratio(frame: LandmarkFrame, eye: Literal["left", "right"]) -> float:
    """(|p2-p6| + |p3-p5|) / (2 |p1-p4|) over the six eye landmarks."""
    if eye == "left":
        idx = LEFT_EYE
    elif eye == "right":
        idx = RIGHT_EYE
    else:
        raise ValueError(f"eye must be 'left' or 'right', got {eye!r}")
    p = frame.points[list(idx)]
    width = float(np.linalg.norm(p[0] - p[3]))
    if width == 0.0:
        raise ValueError(f"{eye} eye has zero horizontal width")
    v1 = float(np.linalg.norm(p[1] - p[5]))
    v2 = float(np.linalg.norm(p[2] - p[4]))
    return (v1 + v2) / (2.0 * width)
