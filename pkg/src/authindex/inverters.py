"""The pluggable inversion seam: a differentiable reference degradation
inverter for desk-scale runs, pair manifests for externally computed
inversions, and the feature-discrepancy utility."""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, List, Optional, Protocol

import numpy as np

from .errors import DuplicateId, MissingFile, ParseError, SchemaError
from .imagecore import ImageBuffer, resize_bilinear, to_grayscale
from .metrics import gaussian_kernel_1d, pyramid_levels

MANIFEST_SCHEMA = "v1"
_LABELS = ("real", "fake")
_PRECOMPUTED_KEYS = ("psnr", "ssim", "lpips", "clip")


class InverterHandle(Protocol):
    differentiable: bool
    descriptor: str

    def __call__(self, x: ImageBuffer) -> ImageBuffer: ...


@dataclass(frozen=True)
class ReferenceInverterConfig:
    blur_sigma: float = 1.5
    noise_sigma: float = 0.01  # fraction of MAX_I
    noise_seed: int = 0
    fidelity: float = 0.6  # 1.0 = identity map

    def __post_init__(self):
        if self.blur_sigma < 0 or self.noise_sigma < 0:
            raise ValueError("blur_sigma and noise_sigma must be non-negative")
        if not 0.0 <= self.fidelity <= 1.0:
            raise ValueError("fidelity must be in [0, 1]")


def _blur_nearest(data: np.ndarray, sigma: float) -> np.ndarray:
    if sigma == 0:
        return data
    from scipy.ndimage import correlate1d

    radius = int(np.ceil(3.0 * sigma))
    k = gaussian_kernel_1d(2 * radius + 1, sigma)
    out = correlate1d(data, k, axis=0, mode="nearest")
    return correlate1d(out, k, axis=1, mode="nearest")


def _noise_field(shape, seed: int) -> np.ndarray:
    return np.random.default_rng(seed).standard_normal(shape)


class ReferenceInverter:
    """Degradation stand-in for a real inversion pipeline.

    High fidelity mimics content a generator reproduces well; low fidelity
    mimics hard-to-invert content. Smooth (up to the clamp) so the attack
    module can differentiate through it.
    """

    differentiable = True

    def __init__(self, cfg: ReferenceInverterConfig = ReferenceInverterConfig()):
        self.cfg = cfg

    @property
    def descriptor(self) -> str:
        c = self.cfg
        return (
            f"reference-inverter/1 blur={c.blur_sigma} noise={c.noise_sigma} "
            f"seed={c.noise_seed} fidelity={c.fidelity}"
        )

    def __call__(self, x: ImageBuffer) -> ImageBuffer:
        c = self.cfg
        degraded = _blur_nearest(x.data, c.blur_sigma)
        if c.noise_sigma > 0:
            degraded = degraded + _noise_field(x.data.shape, c.noise_seed) * c.noise_sigma * x.max_value
        out = c.fidelity * x.data + (1.0 - c.fidelity) * degraded
        return ImageBuffer(np.clip(out, 0.0, x.max_value), x.max_value)


def reference_invert(x: ImageBuffer, cfg: ReferenceInverterConfig) -> ImageBuffer:
    return ReferenceInverter(cfg)(x)


def feature_discrepancy(x: ImageBuffer, x_inv: ImageBuffer, extractor: str = "fourier_magnitude") -> float:
    """l2 norm of the difference of extractor outputs on the two images."""
    if x_inv.data.shape != x.data.shape:
        x_inv = resize_bilinear(x_inv, x.height, x.width)
    if extractor == "fourier_magnitude":
        fa = np.abs(np.fft.fft2(to_grayscale(x).data[:, :, 0]))
        fb = np.abs(np.fft.fft2(to_grayscale(x_inv).data[:, :, 0]))
        return float(np.linalg.norm(fa - fb))
    if extractor == "pyramid":
        la = pyramid_levels(to_grayscale(x).data[:, :, 0] / x.max_value)
        lb = pyramid_levels(to_grayscale(x_inv).data[:, :, 0] / x_inv.max_value)
        return float(np.sqrt(sum(np.sum((a - b) ** 2) for a, b in zip(la, lb))))
    raise ValueError(f"unknown extractor '{extractor}'")


# ---------------------------------------------------------------------------
# pair manifests (JSON Lines, schema v1)


@dataclass
class PairRecord:
    record_id: str
    original_path: Path
    label: str
    generator_tag: str = ""
    inverted_path: Optional[Path] = None
    caption: Optional[str] = None
    precomputed: dict = field(default_factory=dict)
    extra: dict = field(default_factory=dict)  # unknown fields, preserved opaquely

    def to_json_obj(self) -> dict:
        obj = {"id": self.record_id, "original": str(self.original_path)}
        if self.inverted_path is not None:
            obj["inverted"] = str(self.inverted_path)
        obj["label"] = self.label
        obj["generator"] = self.generator_tag
        if self.caption is not None:
            obj["caption"] = self.caption
        if self.precomputed:
            obj["precomputed"] = dict(self.precomputed)
        obj.update(self.extra)
        return obj


def _parse_record(obj: dict, line_no: int, base: Path) -> PairRecord:
    known = {"id", "original", "inverted", "label", "generator", "caption", "precomputed"}
    for f in ("id", "original", "label"):
        if f not in obj:
            raise SchemaError(f, line_no, "missing")
    if not isinstance(obj["id"], str) or not obj["id"]:
        raise SchemaError("id", line_no, "must be a non-empty string")
    if obj["label"] not in _LABELS:
        raise SchemaError("label", line_no, f"must be one of {_LABELS}")
    pre = obj.get("precomputed", {})
    if not isinstance(pre, dict):
        raise SchemaError("precomputed", line_no, "must be an object")
    for k, v in pre.items():
        if k not in _PRECOMPUTED_KEYS:
            raise SchemaError("precomputed", line_no, f"unknown channel '{k}'")
        if not isinstance(v, (int, float)) or isinstance(v, bool):
            raise SchemaError("precomputed", line_no, f"channel '{k}' must be a number")
    return PairRecord(
        record_id=obj["id"],
        original_path=base / obj["original"],
        inverted_path=(base / obj["inverted"]) if obj.get("inverted") is not None else None,
        label=obj["label"],
        generator_tag=obj.get("generator", ""),
        caption=obj.get("caption"),
        precomputed=dict(pre),
        extra={k: v for k, v in obj.items() if k not in known},
    )


def load_manifest(path) -> List[PairRecord]:
    """Parse a JSONL pair manifest; paths resolve relative to the manifest dir.

    A leading adapter header object ({"_header": ...}) is tolerated and skipped.
    """
    path = Path(path)
    if not path.is_file():
        raise MissingFile(path)
    base = path.parent
    records: List[PairRecord] = []
    seen = set()
    with open(path, encoding="utf-8") as fh:
        for line_no, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                obj = json.loads(line)
            except json.JSONDecodeError as exc:
                raise ParseError(line_no, exc.msg) from exc
            if not isinstance(obj, dict):
                raise ParseError(line_no, "record must be a JSON object")
            if "_header" in obj:
                continue
            rec = _parse_record(obj, line_no, base)
            if rec.record_id in seen:
                raise DuplicateId(rec.record_id, line_no)
            seen.add(rec.record_id)
            records.append(rec)
    return records


def write_manifest(records: Iterable[PairRecord], path, base: Optional[Path] = None) -> None:
    """Write canonical-form JSONL; paths are stored relative to the manifest dir."""
    path = Path(path)
    base = base or path.parent
    lines = []
    for rec in records:
        obj = rec.to_json_obj()
        obj["original"] = _relativize(rec.original_path, base)
        if rec.inverted_path is not None:
            obj["inverted"] = _relativize(rec.inverted_path, base)
        lines.append(json.dumps(obj, ensure_ascii=False))
    path.write_text("\n".join(lines) + ("\n" if lines else ""), encoding="utf-8")


def _relativize(p: Path, base: Path) -> str:
    try:
        return str(Path(p).relative_to(base))
    except ValueError:
        return str(p)
