"""Deterministic synthetic landmark dataset generator.

Faces derive from one canonical 68-point template. Drowsiness is
expressed through the eyes: eyelid landmarks are placed so the eye
aspect ratio (EAR) follows the alert or drowsy distribution, drowsy
frames intermittently close fully, and a fraction of drowsy frames get
a head-droop roll. Category effects add noise, strongest on the eye
region for the sunglasses and night categories, emulating the harder
recording conditions.

Generation order is fixed (subject, category, state, frame) and draws
come from a single seeded generator, so a SynthSpec maps to exactly one
dataset.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Dict, List, Tuple

import numpy as np

from .data import LabeledDataset
from .geometry import transform_points
from .landmarks import (
    CATEGORIES,
    LABEL_ALERT,
    LABEL_DROWSY,
    LEFT_EYE,
    RIGHT_EYE,
    LandmarkFrame,
)

EYE_POINTS = tuple(RIGHT_EYE) + tuple(LEFT_EYE)

# Base face box is roughly 140 x 145 pixels centred near (100, 140);
# y grows downward as in image coordinates.
_EYE_WIDTH = 24.0
_EYE_Y = 95.0
_RIGHT_EYE_CX = 70.0
_LEFT_EYE_CX = 130.0


@dataclass(frozen=True)
class CategoryEffect:
    """Per-category corruption: global point noise plus extra eye noise."""

    point_noise_std: float
    eye_noise_std: float


DEFAULT_CATEGORY_EFFECTS: Dict[str, CategoryEffect] = {
    "without_glasses": CategoryEffect(0.35, 0.0),
    "with_glasses": CategoryEffect(0.35, 0.5),
    "with_sunglasses": CategoryEffect(0.40, 1.2),
    "night_without_glasses": CategoryEffect(0.70, 0.4),
    "night_with_glasses": CategoryEffect(0.70, 0.9),
}


@dataclass(frozen=True)
class SynthSpec:
    n_subjects: int = 10
    frames_per_subject_per_state: int = 20
    seed: int = 42
    alert_ear_mean: float = 0.30
    alert_ear_std: float = 0.02
    drowsy_ear_mean: float = 0.12
    drowsy_ear_std: float = 0.03
    closure_probability: float = 0.35
    droop_probability: float = 0.40
    category_effects: Dict[str, CategoryEffect] = field(
        default_factory=lambda: dict(DEFAULT_CATEGORY_EFFECTS)
    )

    def __post_init__(self) -> None:
        if self.n_subjects < 1 or self.frames_per_subject_per_state < 1:
            raise ValueError("subject and frame counts must be >= 1")
        if self.alert_ear_mean <= self.drowsy_ear_mean:
            raise ValueError("alert EAR mean must exceed drowsy EAR mean")
        if self.alert_ear_std <= 0 or self.drowsy_ear_std <= 0:
            raise ValueError("EAR stds must be > 0")
        if not 0.0 <= self.closure_probability <= 1.0:
            raise ValueError("closure probability must be in [0, 1]")
        for name in CATEGORIES:
            if name not in self.category_effects:
                raise ValueError(f"missing category effect for {name}")


def face_template(
    gap_left: float, gap_right: float, eye_width: float = _EYE_WIDTH
) -> np.ndarray:
    """Canonical 68-point face with the given eyelid gaps (pixels).

    EAR of each eye is gap / eye_width by construction.
    """
    pts = np.zeros((68, 2))

    theta = np.linspace(0.15, np.pi - 0.15, 17)
    pts[0:17, 0] = 100.0 - 70.0 * np.cos(theta)
    pts[0:17, 1] = 80.0 + 130.0 * np.sin(theta)

    arc = np.sin(np.linspace(0.0, np.pi, 5))
    pts[17:22, 0] = np.linspace(45.0, 90.0, 5)
    pts[17:22, 1] = 70.0 - 5.0 * arc
    pts[22:27, 0] = np.linspace(110.0, 155.0, 5)
    pts[22:27, 1] = 70.0 - 5.0 * arc

    pts[27:31, 0] = 100.0
    pts[27:31, 1] = np.linspace(88.0, 122.0, 4)
    pts[31:36, 0] = np.linspace(86.0, 114.0, 5)
    pts[31:36, 1] = 132.0 + np.array([0.0, 2.5, 4.0, 2.5, 0.0])

    _place_eye(pts, RIGHT_EYE, _RIGHT_EYE_CX, _EYE_Y, eye_width, gap_right)
    _place_eye(pts, LEFT_EYE, _LEFT_EYE_CX, _EYE_Y, eye_width, gap_left)

    top = np.linspace(np.pi, 0.0, 7)
    pts[48:55, 0] = 100.0 + 28.0 * np.cos(top)
    pts[48:55, 1] = 170.0 - 9.0 * np.sin(top)
    bottom = np.linspace(0.0, np.pi, 7)[1:-1]
    pts[55:60, 0] = 100.0 + 28.0 * np.cos(bottom)
    pts[55:60, 1] = 170.0 + 9.0 * np.sin(bottom)

    itop = np.linspace(np.pi, 0.0, 5)
    pts[60:65, 0] = 100.0 + 18.0 * np.cos(itop)
    pts[60:65, 1] = 170.0 - 4.5 * np.sin(itop)
    ibottom = np.linspace(0.0, np.pi, 5)[1:-1]
    pts[65:68, 0] = 100.0 + 18.0 * np.cos(ibottom)
    pts[65:68, 1] = 170.0 + 4.5 * np.sin(ibottom)

    return pts


def _place_eye(pts, indices, cx, cy, width, gap):
    i = list(indices)
    half = width / 2.0
    sixth = width / 6.0
    pts[i[0]] = (cx - half, cy)
    pts[i[3]] = (cx + half, cy)
    pts[i[1]] = (cx - sixth, cy - gap / 2.0)
    pts[i[2]] = (cx + sixth, cy - gap / 2.0)
    pts[i[5]] = (cx - sixth, cy + gap / 2.0)
    pts[i[4]] = (cx + sixth, cy + gap / 2.0)


@dataclass(frozen=True)
class _SubjectShape:
    scale_x: float
    scale_y: float
    eye_width_factor: float
    signature: np.ndarray  # fixed per-subject offsets, (68, 2)


def _draw_subject_shape(rng: np.random.Generator) -> _SubjectShape:
    signature = rng.normal(0.0, 1.6, size=(68, 2))
    signature[list(EYE_POINTS)] = rng.normal(0.0, 0.4, size=(12, 2))
    return _SubjectShape(
        scale_x=float(rng.uniform(0.88, 1.12)),
        scale_y=float(rng.uniform(0.88, 1.12)),
        eye_width_factor=float(rng.uniform(0.90, 1.10)),
        signature=signature,
    )


# Feature groups that move semi-independently frame to frame, emulating
# expression changes (conversation, brow raises, nose wrinkles).
_GROUPS = (
    tuple(range(0, 17)),     # jaw
    tuple(range(17, 27)),    # brows
    tuple(range(27, 36)),    # nose
    tuple(range(48, 68)),    # mouth
)


def gen_synthetic(spec: SynthSpec) -> LabeledDataset:
    """Equal frame counts per label per category, deterministic per seed."""
    rng = np.random.default_rng(np.uint64(spec.seed))
    per_state = spec.frames_per_subject_per_state
    frames: List[LandmarkFrame] = []
    for s in range(spec.n_subjects):
        subject = f"synth{s:03d}"
        shape = _draw_subject_shape(rng)
        for category in CATEGORIES:
            effect = spec.category_effects[category]
            for label in (LABEL_ALERT, LABEL_DROWSY):
                for i in range(per_state):
                    frame_index = i if label == LABEL_ALERT else per_state + i
                    pts = _frame_points(spec, shape, effect, label, rng)
                    frames.append(
                        LandmarkFrame(
                            subject=subject,
                            category=category,
                            split="train",
                            frame_index=frame_index,
                            label=label,
                            points=pts,
                        )
                    )
    return LabeledDataset(tuple(frames), "synthetic")


def _frame_points(
    spec: SynthSpec,
    shape: _SubjectShape,
    effect: CategoryEffect,
    label: int,
    rng: np.random.Generator,
) -> np.ndarray:
    if label == LABEL_ALERT:
        ear = rng.normal(spec.alert_ear_mean, spec.alert_ear_std)
    elif rng.random() < spec.closure_probability:
        ear = rng.normal(0.03, 0.01)
    else:
        ear = rng.normal(spec.drowsy_ear_mean, spec.drowsy_ear_std)
    ear = max(float(ear), 0.005)

    eye_width = _EYE_WIDTH * shape.eye_width_factor
    asym = 1.0 + rng.normal(0.0, 0.03)
    gap = ear * eye_width
    pts = face_template(gap_left=gap * asym, gap_right=gap, eye_width=eye_width)

    # subject geometry: anisotropic scale about the centroid, then the
    # fixed per-subject signature offsets
    center = pts.mean(axis=0)
    pts = (pts - center) * np.array([shape.scale_x, shape.scale_y]) + center
    pts = pts + shape.signature

    # expression variety: the mouth opens independently of the label
    # (conversation, yawns) and feature groups wobble a little
    opening = float(np.abs(rng.normal(0.0, 7.0)))
    pts = _open_mouth(pts, opening)
    for group in _GROUPS:
        pts[list(group)] += rng.normal(0.0, 1.5, size=2)

    if label == LABEL_DROWSY and rng.random() < spec.droop_probability:
        angle = float(rng.uniform(6.0, 16.0)) * (1.0 if rng.random() < 0.5 else -1.0)
        pts = transform_points(pts, rotate_deg=angle, translate=(0.0, float(rng.uniform(0.0, 8.0))))

    # head pose: in-plane roll plus anisotropic compression standing in
    # for yaw/pitch as seen by a fixed dash camera (a 30-degree yaw
    # already shortens the face by ~15% along x)
    pts = transform_points(
        pts,
        rotate_deg=float(rng.normal(0.0, 9.0)),
        scale=float(np.clip(1.0 + rng.normal(0.0, 0.04), 0.8, 1.2)),
        translate=(float(rng.normal(0.0, 6.0)), float(rng.normal(0.0, 6.0))),
    )
    center = pts.mean(axis=0)
    aspect = np.array([1.0 + rng.normal(0.0, 0.14), 1.0 + rng.normal(0.0, 0.08)])
    aspect = np.clip(aspect, 0.65, 1.35)
    pts = (pts - center) * aspect + center

    noise = rng.normal(0.0, effect.point_noise_std, size=(68, 2))
    if effect.eye_noise_std > 0.0:
        noise[list(EYE_POINTS)] += rng.normal(0.0, effect.eye_noise_std, size=(12, 2))
    pts = pts + noise
    pts.setflags(write=False)
    return pts


def _open_mouth(pts: np.ndarray, opening: float) -> np.ndarray:
    """Drop the lower lip and chin to open the mouth by ``opening`` px."""
    out = np.array(pts)
    out[55:60, 1] += opening            # outer lower lip
    out[65:68, 1] += 0.8 * opening      # inner lower lip
    out[6:11, 1] += 0.5 * opening       # chin follows
    out[61:64, 1] += 0.1 * opening
    return out
