"""Affine transforms on landmark point sets."""

from __future__ import annotations

from typing import Optional, Tuple

import numpy as np


def transform_points(
    points: np.ndarray,
    *,
    rotate_deg: float = 0.0,
    scale: float = 1.0,
    translate: Tuple[float, float] = (0.0, 0.0),
    mirror: bool = False,
    center: Optional[np.ndarray] = None,
) -> np.ndarray:
    """Mirror, rotate, and scale about ``center`` (default: centroid),
    then translate. Mirroring flips x only; callers that need semantic
    left/right landmark identity must reindex afterwards.
    """
    if scale <= 0.0:
        raise ValueError(f"scale factor must be > 0, got {scale}")
    pts = np.asarray(points, dtype=np.float64)
    c = pts.mean(axis=0) if center is None else np.asarray(center, dtype=np.float64)
    p = pts - c
    if mirror:
        p = p * np.array([-1.0, 1.0])
    if rotate_deg != 0.0:
        a = np.deg2rad(rotate_deg)
        rot = np.array([[np.cos(a), -np.sin(a)], [np.sin(a), np.cos(a)]])
        p = p @ rot.T
    p = p * scale
    return p + c + np.asarray(translate, dtype=np.float64)
