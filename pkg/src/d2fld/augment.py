"""Landmark-space augmentation: each frame expands into exactly 6 frames.

The image-space augmentation of the original pipeline acts on landmark
coordinates as plain affine maps, so the recipe works directly on the
points: per variant a rotation/scale/translation/mirror about the frame
centroid, followed by coordinate jitter. Variant 0 is always the
identity. Mirrored frames swap left/right landmark indices through the
68-point symmetry map, keeping semantic identity intact.
"""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field, replace
from pathlib import Path
from typing import List, Tuple, Union

import numpy as np

from .data import LabeledDataset
from .geometry import transform_points
from .landmarks import MIRROR_MAP, LandmarkFrame

AUGMENT_FACTOR = 6


@dataclass(frozen=True)
class Variant:
    rotate_deg: float = 0.0
    translate: Tuple[float, float] = (0.0, 0.0)
    scale: float = 1.0
    mirror: bool = False
    jitter_std: float = 0.0

    def __post_init__(self) -> None:
        if self.scale <= 0.0:
            raise ValueError(f"variant scale must be > 0, got {self.scale}")
        if self.jitter_std < 0.0:
            raise ValueError("jitter std must be >= 0")

    @property
    def is_identity(self) -> bool:
        return (
            self.rotate_deg == 0.0
            and tuple(self.translate) == (0.0, 0.0)
            and self.scale == 1.0
            and not self.mirror
            and self.jitter_std == 0.0
        )


@dataclass(frozen=True)
class AugmentRecipe:
    variants: Tuple[Variant, ...] = field(
        default_factory=lambda: _default_variants()
    )

    def __post_init__(self) -> None:
        if len(self.variants) != AUGMENT_FACTOR:
            raise ValueError(
                f"recipe must have exactly {AUGMENT_FACTOR} variants, got {len(self.variants)}"
            )
        if not self.variants[0].is_identity:
            raise ValueError("variant 0 must be the identity")

    @property
    def factor(self) -> int:
        return len(self.variants)

    def to_json_obj(self) -> dict:
        return {"variants": [asdict(v) for v in self.variants]}

    @classmethod
    def from_json_obj(cls, obj: dict) -> "AugmentRecipe":
        variants = []
        for raw in obj["variants"]:
            raw = dict(raw)
            if "translate" in raw:
                raw["translate"] = tuple(raw["translate"])
            variants.append(Variant(**raw))
        return cls(variants=tuple(variants))

    @classmethod
    def from_json_file(cls, path: Union[str, Path]) -> "AugmentRecipe":
        with open(path, "r", encoding="utf-8") as fh:
            return cls.from_json_obj(json.load(fh))


def _default_variants() -> Tuple[Variant, ...]:
    # Magnitudes stay within plausible in-cab head motion.
    return (
        Variant(),
        Variant(rotate_deg=7.0, jitter_std=1.0),
        Variant(rotate_deg=-7.0, jitter_std=1.0),
        Variant(scale=0.95, jitter_std=1.0),
        Variant(scale=1.05, jitter_std=1.0),
        Variant(mirror=True, jitter_std=1.0),
    )


def default_recipe() -> AugmentRecipe:
    return AugmentRecipe()


def augment_frame(
    frame: LandmarkFrame,
    recipe: AugmentRecipe,
    variant: int,
    rng: np.random.Generator,
) -> LandmarkFrame:
    """Apply one recipe variant. Label, category, subject, split, and
    frame index are preserved; only the points change."""
    if not 0 <= variant < len(recipe.variants):
        raise ValueError(f"variant {variant} outside 0..{len(recipe.variants) - 1}")
    v = recipe.variants[variant]
    if v.is_identity:
        return frame
    pts = transform_points(
        frame.points,
        rotate_deg=v.rotate_deg,
        scale=v.scale,
        translate=v.translate,
        mirror=v.mirror,
    )
    if v.mirror:
        pts = pts[MIRROR_MAP]
    if v.jitter_std > 0.0:
        pts = pts + rng.normal(0.0, v.jitter_std, size=pts.shape)
    pts.setflags(write=False)
    return frame.with_points(pts)


def augment_dataset(
    ds: LabeledDataset, recipe: AugmentRecipe, seed: int
) -> LabeledDataset:
    """Expand every frame into ``recipe.factor`` frames, deterministically.

    Output order is input order crossed with variant order. Variant 0
    keeps its frame index (and is bit-identical to the source frame);
    variants v >= 1 are renumbered to index + v * N, N being one past the
    largest input frame index, so frame identities stay unique without
    widening the wire schema.
    """
    rng = np.random.default_rng(np.uint64(seed))
    stride = max((f.frame_index for f in ds.frames), default=0) + 1
    out: List[LandmarkFrame] = []
    for frame in ds.frames:
        for v in range(recipe.factor):
            new = augment_frame(frame, recipe, v, rng)
            if v > 0:
                new = replace(new, frame_index=frame.frame_index + v * stride)
            out.append(new)
    result = LabeledDataset(tuple(out), "augmented")
    assert len(result) == recipe.factor * len(ds)
    return result
