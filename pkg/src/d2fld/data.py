"""Dataset container, JSONL ingestion, split accounting, and partitioning.

The wire format is one JSON object per line, UTF-8:
``{"subject": str, "category": str, "split": "train"|"eval",
"frame": int, "label": 0|1, "points": [[x, y] * 68]}``.
"""

from __future__ import annotations

import io
import json
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Dict, Iterable, List, Optional, Tuple, Union

import numpy as np

from .landmarks import CATEGORIES, FrameValidationError, LandmarkFrame, validate_frame

Source = Union[str, Path, io.TextIOBase]

PROVENANCES = ("ingested", "synthetic", "augmented")


class DatasetError(ValueError):
    pass


@dataclass(frozen=True)
class LabeledDataset:
    frames: Tuple[LandmarkFrame, ...]
    provenance: str

    def __post_init__(self) -> None:
        if self.provenance not in PROVENANCES:
            raise DatasetError(f"unknown provenance {self.provenance!r}")
        seen = set()
        for f in self.frames:
            key = (f.subject, f.category, f.frame_index)
            if key in seen:
                raise DatasetError(f"duplicate frame identity {key}")
            seen.add(key)

    def __len__(self) -> int:
        return len(self.frames)

    def subjects(self) -> Tuple[str, ...]:
        return tuple(sorted({f.subject for f in self.frames}))

    def split_frames(self, split: str) -> Tuple[LandmarkFrame, ...]:
        return tuple(f for f in self.frames if f.split == split)

    def with_frames(self, frames: Iterable[LandmarkFrame], provenance: Optional[str] = None) -> "LabeledDataset":
        return LabeledDataset(tuple(frames), provenance or self.provenance)


def frame_to_record(frame: LandmarkFrame) -> dict:
    return {
        "subject": frame.subject,
        "category": frame.category,
        "split": frame.split,
        "frame": frame.frame_index,
        "label": frame.label,
        "points": [[float(x), float(y)] for x, y in frame.points],
    }


def load_jsonl(source: Source, *, skip_invalid: bool = False) -> Tuple[LabeledDataset, List[Tuple[int, str]]]:
    """Read a landmark JSONL stream.

    Returns the dataset and the list of (line number, reason) for lines
    that were skipped. By default the first malformed line raises a
    DatasetError naming its line number; with ``skip_invalid`` the bad
    lines are collected and loading continues.
    """
    if isinstance(source, (str, Path)):
        with open(source, "r", encoding="utf-8") as fh:
            return load_jsonl(fh, skip_invalid=skip_invalid)

    frames: List[LandmarkFrame] = []
    skipped: List[Tuple[int, str]] = []
    for lineno, line in enumerate(source, start=1):
        line = line.strip()
        if not line:
            continue
        try:
            raw = json.loads(line)
            if not isinstance(raw, dict):
                raise FrameValidationError(["record must be a JSON object"])
            frames.append(validate_frame(raw))
        except (json.JSONDecodeError, FrameValidationError) as exc:
            if not skip_invalid:
                raise DatasetError(f"line {lineno}: {exc}") from exc
            skipped.append((lineno, str(exc)))
    try:
        return LabeledDataset(tuple(frames), "ingested"), skipped
    except DatasetError as exc:
        raise DatasetError(f"{source if isinstance(source, str) else 'input'}: {exc}") from exc


def write_jsonl(ds: LabeledDataset, destination: Union[str, Path, io.TextIOBase]) -> None:
    """Write one compact JSON object per frame, in dataset order."""
    if isinstance(destination, (str, Path)):
        with open(destination, "w", encoding="utf-8") as fh:
            write_jsonl(ds, fh)
            return
    for frame in ds.frames:
        destination.write(json.dumps(frame_to_record(frame), separators=(",", ":")))
        destination.write("\n")


@dataclass(frozen=True)
class SummaryTable:
    """Frame counts by (split, category), Table-style with totals."""

    counts: Dict[Tuple[str, str], int]

    SPLITS = ("train", "eval")

    def cell(self, split: str, category: str) -> int:
        return self.counts.get((split, category), 0)

    @property
    def total(self) -> int:
        return sum(self.counts.values())

    def split_total(self, split: str) -> int:
        return sum(v for (s, _), v in self.counts.items() if s == split)

    def category_total(self, category: str) -> int:
        return sum(v for (_, c), v in self.counts.items() if c == category)

    def rows(self) -> List[Tuple[str, str, int]]:
        return [
            (split, category, self.cell(split, category))
            for split in self.SPLITS
            for category in CATEGORIES
        ]

    def to_json_obj(self) -> dict:
        return {
            "rows": [
                {"split": s, "category": c, "frames": n} for s, c, n in self.rows()
            ],
            "split_totals": {s: self.split_total(s) for s in self.SPLITS},
            "total": self.total,
        }

    def to_text(self) -> str:
        width = max(len(c) for c in CATEGORIES)
        lines = [f"{'Split':<8} {'Category':<{width}} {'Frames':>10}"]
        lines.append("-" * (8 + 1 + width + 1 + 10))
        for s, c, n in self.rows():
            lines.append(f"{s:<8} {c:<{width}} {n:>10,}")
        lines.append("-" * (8 + 1 + width + 1 + 10))
        lines.append(f"{'total':<8} {'':<{width}} {self.total:>10,}")
        return "\n".join(lines)

    def to_csv(self) -> str:
        out = ["split,category,frames"]
        out += [f"{s},{c},{n}" for s, c, n in self.rows()]
        out.append(f"total,,{self.total}")
        return "\n".join(out) + "\n"


def summarize(ds: LabeledDataset) -> SummaryTable:
    counts: Dict[Tuple[str, str], int] = {}
    for f in ds.frames:
        key = (f.split, f.category)
        counts[key] = counts.get(key, 0) + 1
    return SummaryTable(counts)


def partition(
    ds: LabeledDataset, eval_subject_fraction: float
) -> Tuple[LabeledDataset, LabeledDataset]:
    """Subject-disjoint split: no subject appears on both sides.

    The last round(fraction * n) subjects in sorted order become the
    evaluation side; frames have their ``split`` field rewritten to match
    their placement.
    """
    subjects = ds.subjects()
    n = len(subjects)
    if n < 2:
        raise DatasetError(f"partition needs at least 2 subjects, got {n}")
    n_eval = int(round(eval_subject_fraction * n))
    if n_eval == 0:
        raise DatasetError(
            f"eval fraction {eval_subject_fraction} yields 0 evaluation subjects for {n} subjects"
        )
    if n_eval >= n:
        raise DatasetError(
            f"eval fraction {eval_subject_fraction} leaves no training subjects ({n_eval}/{n})"
        )
    eval_subjects = set(subjects[n - n_eval:])
    train_frames = [
        replace(f, split="train") for f in ds.frames if f.subject not in eval_subjects
    ]
    eval_frames = [
        replace(f, split="eval") for f in ds.frames if f.subject in eval_subjects
    ]
    return ds.with_frames(train_frames), ds.with_frames(eval_frames)
