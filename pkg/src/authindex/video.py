"""Frame sampling and mean aggregation extending the image index to videos."""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import List, Sequence

import numpy as np

from .errors import DuplicateId, EmptyInput, MissingFile, ParseError, SchemaError

FRAME_STRIDE = 30  # one frame per 30-frame interval when the video is long enough
DEFAULT_SAMPLE_COUNT = 8


@dataclass(frozen=True)
class FramePlan:
    total_frames: int
    sample_count: int
    indices: tuple

    def __post_init__(self):
        if any(i < 0 or i >= self.total_frames for i in self.indices):
            raise ValueError("frame index out of bounds")
        if any(b <= a for a, b in zip(self.indices, self.indices[1:])):
            raise ValueError("frame indices must be strictly increasing")


def plan_frames(total_frames: int, sample_count: int = DEFAULT_SAMPLE_COUNT) -> FramePlan:
    """Stride-30 sampling when possible, uniform spacing for shorter videos."""
    if total_frames < 1 or sample_count < 1:
        raise ValueError("total_frames and sample_count must be positive")
    if total_frames >= FRAME_STRIDE * sample_count:
        indices = [FRAME_STRIDE * i for i in range(sample_count)]
    elif sample_count == 1 or total_frames == 1:
        indices = [0]
    else:
        raw = [round(i * (total_frames - 1) / (sample_count - 1)) for i in range(sample_count)]
        indices = sorted(set(raw))
    return FramePlan(total_frames=total_frames, sample_count=sample_count, indices=tuple(indices))


def video_a_index(frame_scores: Sequence[float]) -> float:
    if len(frame_scores) == 0:
        raise EmptyInput("video_a_index needs at least one frame score")
    return float(np.mean(frame_scores))


@dataclass
class VideoRecord:
    record_id: str
    frame_paths: List[Path]
    label: str = None
    extra: dict = field(default_factory=dict)


def load_video_manifest(path) -> List[VideoRecord]:
    """JSONL: {"id": str, "frames": [path...], "label": "real"|"fake"}."""
    path = Path(path)
    if not path.is_file():
        raise MissingFile(path)
    base = path.parent
    out: List[VideoRecord] = []
    seen = set()
    with open(path, encoding="utf-8") as fh:
        for line_no, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                obj = json.loads(line)
            except json.JSONDecodeError as exc:
                raise ParseError(line_no, exc.msg) from exc
            for f in ("id", "frames"):
                if f not in obj:
                    raise SchemaError(f, line_no, "missing")
            if not isinstance(obj["frames"], list) or not obj["frames"]:
                raise SchemaError("frames", line_no, "must be a non-empty list")
            label = obj.get("label")
            if label is not None and label not in ("real", "fake"):
                raise SchemaError("label", line_no, "must be 'real' or 'fake'")
            if obj["id"] in seen:
                raise DuplicateId(obj["id"], line_no)
            seen.add(obj["id"])
            out.append(
                VideoRecord(
                    record_id=obj["id"],
                    frame_paths=[base / p for p in obj["frames"]],
                    label=label,
                    extra={k: v for k, v in obj.items() if k not in ("id", "frames", "label")},
                )
            )
    return out
