"""The four similarity channels of the composite score.

PSNR and SSIM are exact reference implementations. Perceptual distance and
semantic similarity are provider interfaces: deterministic dependency-free
reference providers live here, precomputed manifest values can override any
channel, and learned-network values arrive through manifests produced by the
external adapter.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Protocol

import numpy as np

from .errors import DimensionMismatch, ImageTooSmall, ProviderUnavailable
from .imagecore import ImageBuffer, resize_bilinear, to_grayscale

PSNR_CAP = 100.0  # dB; MSE below MAX_I^2 * 1e-10 is treated as zero
MSE_FLOOR_REL = 1e-10

# reference perceptual provider constants (shared with the torch mirror)
PYRAMID_LEVEL_WEIGHTS = (0.5, 0.3, 0.2)
CONTRAST_NORM_SIGMA = 2.0
CONTRAST_NORM_EPS = 1e-6

# reference semantic provider constants
SEMANTIC_GRID = 8
SEMANTIC_ORIENT_BINS = 8
SEMANTIC_ORIENT_KAPPA = 4.0


@dataclass(frozen=True)
class MetricVector:
    psnr: float
    ssim: float
    lpips: float
    clip_sim: float

    def as_features(self) -> np.ndarray:
        """Feature row (psnr, ssim, 1-lpips, clip) entering the linear combiner."""
        return np.array([self.psnr, self.ssim, 1.0 - self.lpips, self.clip_sim])


@dataclass(frozen=True)
class SsimConfig:
    window: int = 11
    gaussian_sigma: float = 1.5
    k1: float = 0.01
    k2: float = 0.03

    def __post_init__(self):
        if self.window < 3 or self.window % 2 == 0:
            raise ValueError("window must be odd and >= 3")
        if self.gaussian_sigma <= 0 or self.k1 <= 0 or self.k2 <= 0:
            raise ValueError("gaussian_sigma, k1, k2 must be positive")


class PerceptualProvider(Protocol):
    def __call__(self, x: ImageBuffer, y: ImageBuffer) -> float: ...


class SemanticProvider(Protocol):
    def __call__(self, x: ImageBuffer) -> np.ndarray: ...


def psnr(x: ImageBuffer, y: ImageBuffer) -> float:
    """10*log10(MAX^2 / MSE) over all samples, capped at PSNR_CAP for near-zero MSE."""
    if x.data.shape != y.data.shape:
        raise DimensionMismatch(f"psnr inputs {x.data.shape} vs {y.data.shape}")
    mse = float(np.mean((x.data - y.data) ** 2))
    floor = x.max_value**2 * MSE_FLOOR_REL
    if mse < floor:
        return PSNR_CAP
    return 10.0 * np.log10(x.max_value**2 / mse)


def gaussian_kernel_1d(window: int, sigma: float) -> np.ndarray:
    r = np.arange(window) - (window - 1) / 2.0
    k = np.exp(-(r**2) / (2.0 * sigma**2))
    return k / k.sum()


def _filter_valid(img: np.ndarray, k: np.ndarray) -> np.ndarray:
    """Separable 'valid' correlation of a 2-D array with an outer-product kernel."""
    from numpy.lib.stride_tricks import sliding_window_view

    tmp = sliding_window_view(img, len(k), axis=1) @ k
    return np.tensordot(sliding_window_view(tmp, len(k), axis=0), k, axes=([2], [0]))


def ssim_map(x2d: np.ndarray, y2d: np.ndarray, max_value: float, cfg: SsimConfig) -> np.ndarray:
    k = gaussian_kernel_1d(cfg.window, cfg.gaussian_sigma)
    c1 = (cfg.k1 * max_value) ** 2
    c2 = (cfg.k2 * max_value) ** 2
    mu_x = _filter_valid(x2d, k)
    mu_y = _filter_valid(y2d, k)
    var_x = _filter_valid(x2d * x2d, k) - mu_x**2
    var_y = _filter_valid(y2d * y2d, k) - mu_y**2
    cov = _filter_valid(x2d * y2d, k) - mu_x * mu_y
    num = (2 * mu_x * mu_y + c1) * (2 * cov + c2)
    den = (mu_x**2 + mu_y**2 + c1) * (var_x + var_y + c2)
    return num / den


def ssim(x: ImageBuffer, y: ImageBuffer, cfg: SsimConfig = SsimConfig()) -> float:
    """Mean Gaussian-weighted SSIM over valid window positions of grayscale inputs."""
    if x.data.shape != y.data.shape:
        raise DimensionMismatch(f"ssim inputs {x.data.shape} vs {y.data.shape}")
    if min(x.height, x.width) < cfg.window:
        raise ImageTooSmall(f"image {x.height}x{x.width} smaller than window {cfg.window}")
    xg = to_grayscale(x).data[:, :, 0]
    yg = to_grayscale(y).data[:, :, 0]
    return float(np.mean(ssim_map(xg, yg, x.max_value, cfg)))


# ---------------------------------------------------------------------------
# reference perceptual provider: multiscale contrast-normalized pyramid


def _gaussian_blur_nearest(img: np.ndarray, sigma: float) -> np.ndarray:
    from scipy.ndimage import correlate1d

    radius = int(np.ceil(3.0 * sigma))
    k = gaussian_kernel_1d(2 * radius + 1, sigma)
    out = correlate1d(img, k, axis=0, mode="nearest")
    return correlate1d(out, k, axis=1, mode="nearest")


def contrast_normalize(gray01: np.ndarray) -> np.ndarray:
    mu = _gaussian_blur_nearest(gray01, CONTRAST_NORM_SIGMA)
    var = _gaussian_blur_nearest(gray01 * gray01, CONTRAST_NORM_SIGMA) - mu * mu
    std = np.sqrt(np.maximum(var, 0.0) + CONTRAST_NORM_EPS)
    return (gray01 - mu) / std


def _avgpool2(img: np.ndarray) -> np.ndarray:
    h, w = (img.shape[0] // 2) * 2, (img.shape[1] // 2) * 2
    c = img[:h, :w]
    return 0.25 * (c[0::2, 0::2] + c[0::2, 1::2] + c[1::2, 0::2] + c[1::2, 1::2])


def pyramid_levels(gray01: np.ndarray) -> list[np.ndarray]:
    levels = [contrast_normalize(gray01)]
    for _ in range(len(PYRAMID_LEVEL_WEIGHTS) - 1):
        prev = levels[-1]
        if min(prev.shape) < 2:
            break
        levels.append(_avgpool2(prev))
    return levels


class ReferencePyramidDistance:
    """Weighted MSE over a low-pass pyramid of contrast-normalized grayscale images.

    Deterministic, parameter-free; a stand-in with the same shape of behavior as
    a learned perceptual distance (0 on identical inputs, grows with distortion).
    """

    def __call__(self, x: ImageBuffer, y: ImageBuffer) -> float:
        xs = pyramid_levels(to_grayscale(x).data[:, :, 0] / x.max_value)
        ys = pyramid_levels(to_grayscale(y).data[:, :, 0] / y.max_value)
        d = 0.0
        for w, a, b in zip(PYRAMID_LEVEL_WEIGHTS, xs, ys):
            d += w * float(np.mean((a - b) ** 2))
        return d


# ---------------------------------------------------------------------------
# reference semantic provider: grid thumbnail + mean color + orientation histogram


def _grid_pool(gray01: np.ndarray, grid: int) -> np.ndarray:
    h, w = gray01.shape
    rb = [int(np.floor(i * h / grid)) for i in range(grid + 1)]
    cb = [int(np.floor(j * w / grid)) for j in range(grid + 1)]
    out = np.empty((grid, grid))
    for i in range(grid):
        r0, r1 = rb[i], max(rb[i + 1], rb[i] + 1)
        for j in range(grid):
            c0, c1 = cb[j], max(cb[j + 1], cb[j] + 1)
            out[i, j] = gray01[r0:r1, c0:c1].mean()
    return out


def _central_gradients(gray01: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    p = np.pad(gray01, 1, mode="edge")
    gx = 0.5 * (p[1:-1, 2:] - p[1:-1, :-2])
    gy = 0.5 * (p[2:, 1:-1] - p[:-2, 1:-1])
    return gx, gy


def orientation_histogram(gray01: np.ndarray) -> np.ndarray:
    """Soft-binned, magnitude-weighted gradient orientation histogram (smooth)."""
    gx, gy = _central_gradients(gray01)
    mag = np.sqrt(gx * gx + gy * gy + 1e-12)
    theta = np.arctan2(gy, gx)
    centers = -np.pi + (np.arange(SEMANTIC_ORIENT_BINS) + 0.5) * (2 * np.pi / SEMANTIC_ORIENT_BINS)
    logits = SEMANTIC_ORIENT_KAPPA * np.cos(theta[:, :, None] - centers)
    soft = np.exp(logits - logits.max(axis=2, keepdims=True))
    soft /= soft.sum(axis=2, keepdims=True)
    hist = (mag[:, :, None] * soft).sum(axis=(0, 1))
    return hist / (mag.sum() + 1e-8)


class ReferenceSemanticEmbedding:
    """Fixed handcrafted embedding: 8x8 grayscale thumbnail, per-channel mean
    color, soft orientation histogram, and a constant bias, l2-normalized.
    """

    dim = SEMANTIC_GRID * SEMANTIC_GRID + 3 + SEMANTIC_ORIENT_BINS + 1

    def __call__(self, x: ImageBuffer) -> np.ndarray:
        gray01 = to_grayscale(x).data[:, :, 0] / x.max_value
        thumb = _grid_pool(gray01, SEMANTIC_GRID).ravel()
        means = x.data.mean(axis=(0, 1)) / x.max_value
        if means.shape[0] == 1:
            means = np.repeat(means, 3)
        hist = orientation_histogram(gray01)
        v = np.concatenate([thumb, means, hist, [1.0]])
        return v / np.linalg.norm(v)


def perceptual_distance(x: ImageBuffer, y: ImageBuffer, provider: PerceptualProvider) -> float:
    if provider is None:
        raise ProviderUnavailable("no perceptual provider configured")
    return float(provider(x, y))


def semantic_similarity(x: ImageBuffer, y: ImageBuffer, provider: SemanticProvider) -> float:
    if provider is None:
        raise ProviderUnavailable("no semantic provider configured")
    ex, ey = np.asarray(provider(x)), np.asarray(provider(y))
    return float(np.dot(ex, ey))


@dataclass(frozen=True)
class Providers:
    perceptual: Optional[PerceptualProvider] = None
    semantic: Optional[SemanticProvider] = None

    @staticmethod
    def reference() -> "Providers":
        return Providers(ReferencePyramidDistance(), ReferenceSemanticEmbedding())


def metric_vector(
    x: ImageBuffer,
    x_inv: ImageBuffer,
    providers: Providers = None,
    ssim_cfg: SsimConfig = SsimConfig(),
    precomputed: dict | None = None,
) -> MetricVector:
    """All four channels; precomputed manifest values win per-channel."""
    providers = providers or Providers.reference()
    pre = precomputed or {}
    needs_images = not {"psnr", "ssim", "lpips", "clip"} <= pre.keys()
    if needs_images and x_inv.data.shape != x.data.shape:
        x_inv = resize_bilinear(x_inv, x.height, x.width)
    return MetricVector(
        psnr=float(pre["psnr"]) if "psnr" in pre else psnr(x, x_inv),
        ssim=float(pre["ssim"]) if "ssim" in pre else ssim(x, x_inv, ssim_cfg),
        lpips=float(pre["lpips"]) if "lpips" in pre else perceptual_distance(x, x_inv, providers.perceptual),
        clip_sim=float(pre["clip"]) if "clip" in pre else semantic_similarity(x, x_inv, providers.semantic),
    )


class PrecomputedLookup:
    """Perceptual/semantic channel source backed by a per-record value table."""

    def __init__(self, table: dict):
        self.table = dict(table)

    def lpips(self, record_id: str) -> float:
        try:
            return float(self.table[record_id]["lpips"])
        except KeyError as exc:
            raise ProviderUnavailable(f"no precomputed lpips for record '{record_id}'") from exc

    def clip(self, record_id: str) -> float:
        try:
            return float(self.table[record_id]["clip"])
        except KeyError as exc:
            raise ProviderUnavailable(f"no precomputed clip for record '{record_id}'") from exc
