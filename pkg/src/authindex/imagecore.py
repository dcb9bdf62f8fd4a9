"""Image buffers, deterministic I/O (PNG + binary PPM/PGM), color conversion, resizing.

Samples are kept as float64 internally; quantization happens only at save time.
"""

from __future__ import annotations

import io
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import CorruptStream, MissingFile, UnsupportedFormat

# ITU-R BT.601 luminance weights
_LUMA = np.array([0.299, 0.587, 0.114])


@dataclass(frozen=True)
class ImageBuffer:
    """H x W x C pixel array with a declared value range [0, max_value]."""

    data: np.ndarray  # shape (H, W, C), float64
    max_value: float = 255.0

    def __post_init__(self):
        arr = np.asarray(self.data, dtype=np.float64)
        if arr.ndim == 2:
            arr = arr[:, :, None]
        if arr.ndim != 3 or arr.shape[2] not in (1, 3):
            raise ValueError(f"expected (H, W, C) with C in {{1,3}}, got shape {arr.shape}")
        if self.max_value <= 0:
            raise ValueError("max_value must be positive")
        if arr.size == 0:
            raise ValueError("empty image")
        if arr.min() < 0 or arr.max() > self.max_value:
            raise ValueError("samples outside [0, max_value]")
        arr.flags.writeable = False
        object.__setattr__(self, "data", arr)

    @property
    def height(self) -> int:
        return self.data.shape[0]

    @property
    def width(self) -> int:
        return self.data.shape[1]

    @property
    def channels(self) -> int:
        return self.data.shape[2]


def load_image(path) -> ImageBuffer:
    """Decode a PNG or binary PPM/PGM file into an ImageBuffer with max_value 255."""
    path = Path(path)
    if not path.is_file():
        raise MissingFile(path)
    raw = path.read_bytes()
    if raw[:2] in (b"P5", b"P6"):
        return _decode_pnm(raw, path)
    if raw[:8] == b"\x89PNG\r\n\x1a\n":
        return _decode_png(raw, path)
    raise UnsupportedFormat(path, "expected PNG or binary PPM/PGM magic")


def save_image(img: ImageBuffer, path) -> None:
    """Write PNG (by extension .png) or binary P6/P5, rounding half-up to 8 bits."""
    path = Path(path)
    q = np.floor(img.data * (255.0 / img.max_value) + 0.5)
    q = np.clip(q, 0, 255).astype(np.uint8)
    if path.suffix.lower() == ".png":
        from PIL import Image

        arr = q[:, :, 0] if img.channels == 1 else q
        Image.fromarray(arr).save(path, format="PNG")
        return
    magic = b"P5" if img.channels == 1 else b"P6"
    header = b"%s\n%d %d\n255\n" % (magic, img.width, img.height)
    path.write_bytes(header + q.tobytes())


def _decode_pnm(raw: bytes, path: Path) -> ImageBuffer:
    try:
        magic, fields, offset = raw[:2], [], 2
        while len(fields) < 3:
            # skip whitespace and comments between header tokens
            while offset < len(raw) and raw[offset : offset + 1].isspace():
                offset += 1
            if raw[offset : offset + 1] == b"#":
                while offset < len(raw) and raw[offset] != 0x0A:
                    offset += 1
                continue
            start = offset
            while offset < len(raw) and not raw[offset : offset + 1].isspace():
                offset += 1
            fields.append(int(raw[start:offset]))
        offset += 1  # single whitespace after maxval
        width, height, maxval = fields
        if maxval != 255:
            raise UnsupportedFormat(path, f"maxval {maxval}, only 255 supported")
        channels = 1 if magic == b"P5" else 3
        n = width * height * channels
        body = raw[offset : offset + n]
        if len(body) != n:
            raise CorruptStream(path, "truncated pixel data")
        data = np.frombuffer(body, dtype=np.uint8).astype(np.float64)
        return ImageBuffer(data.reshape(height, width, channels))
    except (ValueError, IndexError) as exc:
        raise CorruptStream(path, str(exc)) from exc


def _decode_png(raw: bytes, path: Path) -> ImageBuffer:
    from PIL import Image, UnidentifiedImageError

    try:
        with Image.open(io.BytesIO(raw)) as im:
            im.load()
            if im.mode not in ("L", "RGB"):
                im = im.convert("RGB" if im.mode not in ("1", "I;16", "I", "LA") else "L")
                if im.mode == "LA":  # pragma: no cover - Pillow normalizes above
                    im = im.convert("L")
            arr = np.asarray(im, dtype=np.float64)
    except UnidentifiedImageError as exc:
        raise UnsupportedFormat(path, str(exc)) from exc
    except OSError as exc:
        raise CorruptStream(path, str(exc)) from exc
    if arr.max(initial=0.0) > 255.0:
        raise UnsupportedFormat(path, "bit depth > 8 not supported")
    return ImageBuffer(arr)


def to_grayscale(img: ImageBuffer) -> ImageBuffer:
    """Collapse RGB to BT.601 luminance; grayscale passes through unchanged."""
    if img.channels == 1:
        return img
    y = img.data @ _LUMA
    return ImageBuffer(y[:, :, None], img.max_value)


def resize_bilinear(img: ImageBuffer, new_h: int, new_w: int) -> ImageBuffer:
    """Corner-aligned bilinear resampling."""
    if new_h < 1 or new_w < 1:
        raise ValueError("target dimensions must be >= 1")
    h, w = img.height, img.width
    if (new_h, new_w) == (h, w):
        return img

    def _coords(n_src, n_dst):
        if n_dst == 1:
            return np.array([(n_src - 1) / 2.0])
        return np.arange(n_dst) * ((n_src - 1) / (n_dst - 1))

    ys, xs = _coords(h, new_h), _coords(w, new_w)
    y0 = np.clip(np.floor(ys).astype(int), 0, h - 1)
    x0 = np.clip(np.floor(xs).astype(int), 0, w - 1)
    y1 = np.minimum(y0 + 1, h - 1)
    x1 = np.minimum(x0 + 1, w - 1)
    wy = (ys - y0)[:, None, None]
    wx = (xs - x0)[None, :, None]
    d = img.data
    top = d[y0][:, x0] * (1 - wx) + d[y0][:, x1] * wx
    bot = d[y1][:, x0] * (1 - wx) + d[y1][:, x1] * wx
    out = top * (1 - wy) + bot * wy
    return ImageBuffer(np.clip(out, 0.0, img.max_value), img.max_value)
