"""Float64 torch mirror of the scoring path through the reference inverter.

The attack module needs exact gradients of A-index(x, inverter(x + delta))
with respect to delta. Every operation here reproduces its numpy counterpart
(same kernels, same padding, same constants) so the two paths agree to
~1e-12 in value and autograd yields the exact derivative of the smooth chain
(clamps contribute zero subgradient outside range).
"""

from __future__ import annotations

import numpy as np
import torch

from . import metrics as M
from .imagecore import ImageBuffer, _LUMA
from .index import WeightVector
from .inverters import ReferenceInverter, _noise_field
from .metrics import SsimConfig, gaussian_kernel_1d

torch.set_default_dtype(torch.float64)


def _t(arr: np.ndarray) -> torch.Tensor:
    return torch.from_numpy(np.array(arr, dtype=np.float64))  # copy: buffers are read-only


def _sep_filter_replicate(img: torch.Tensor, k: torch.Tensor) -> torch.Tensor:
    """Separable correlation with edge replication; img is (H, W)."""
    r = (len(k) - 1) // 2
    x = img[None, None]
    x = torch.nn.functional.pad(x, (r, r, 0, 0), mode="replicate")
    x = torch.nn.functional.conv2d(x, k.reshape(1, 1, 1, -1))
    x = torch.nn.functional.pad(x, (0, 0, r, r), mode="replicate")
    x = torch.nn.functional.conv2d(x, k.reshape(1, 1, -1, 1))
    return x[0, 0]


def _sep_filter_valid(img: torch.Tensor, k: torch.Tensor) -> torch.Tensor:
    x = img[None, None]
    x = torch.nn.functional.conv2d(x, k.reshape(1, 1, 1, -1))
    x = torch.nn.functional.conv2d(x, k.reshape(1, 1, -1, 1))
    return x[0, 0]


def _grayscale(img: torch.Tensor) -> torch.Tensor:
    if img.shape[2] == 1:
        return img[:, :, 0]
    return img @ _t(_LUMA)


def _psnr(x: torch.Tensor, y: torch.Tensor, max_value: float) -> torch.Tensor:
    mse = torch.mean((x - y) ** 2)
    floor = max_value**2 * M.MSE_FLOOR_REL
    return 10.0 * torch.log10(max_value**2 / torch.clamp(mse, min=floor))


def _ssim(xg: torch.Tensor, yg: torch.Tensor, max_value: float, cfg: SsimConfig) -> torch.Tensor:
    k = _t(gaussian_kernel_1d(cfg.window, cfg.gaussian_sigma))
    c1 = (cfg.k1 * max_value) ** 2
    c2 = (cfg.k2 * max_value) ** 2
    mu_x = _sep_filter_valid(xg, k)
    mu_y = _sep_filter_valid(yg, k)
    var_x = _sep_filter_valid(xg * xg, k) - mu_x**2
    var_y = _sep_filter_valid(yg * yg, k) - mu_y**2
    cov = _sep_filter_valid(xg * yg, k) - mu_x * mu_y
    num = (2 * mu_x * mu_y + c1) * (2 * cov + c2)
    den = (mu_x**2 + mu_y**2 + c1) * (var_x + var_y + c2)
    return torch.mean(num / den)


def _contrast_normalize(g: torch.Tensor) -> torch.Tensor:
    radius = int(np.ceil(3.0 * M.CONTRAST_NORM_SIGMA))
    k = _t(gaussian_kernel_1d(2 * radius + 1, M.CONTRAST_NORM_SIGMA))
    mu = _sep_filter_replicate(g, k)
    var = _sep_filter_replicate(g * g, k) - mu * mu
    std = torch.sqrt(torch.clamp(var, min=0.0) + M.CONTRAST_NORM_EPS)
    return (g - mu) / std


def _avgpool2(img: torch.Tensor) -> torch.Tensor:
    h, w = (img.shape[0] // 2) * 2, (img.shape[1] // 2) * 2
    c = img[:h, :w]
    return 0.25 * (c[0::2, 0::2] + c[0::2, 1::2] + c[1::2, 0::2] + c[1::2, 1::2])


def _pyramid(g: torch.Tensor) -> list[torch.Tensor]:
    levels = [_contrast_normalize(g)]
    for _ in range(len(M.PYRAMID_LEVEL_WEIGHTS) - 1):
        prev = levels[-1]
        if min(prev.shape) < 2:
            break
        levels.append(_avgpool2(prev))
    return levels


def _perceptual(xg01: torch.Tensor, yg01: torch.Tensor) -> torch.Tensor:
    d = torch.zeros(())
    for w, a, b in zip(M.PYRAMID_LEVEL_WEIGHTS, _pyramid(xg01), _pyramid(yg01)):
        d = d + w * torch.mean((a - b) ** 2)
    return d


def _grid_pool(g: torch.Tensor, grid: int) -> torch.Tensor:
    h, w = g.shape
    rb = [int(np.floor(i * h / grid)) for i in range(grid + 1)]
    cb = [int(np.floor(j * w / grid)) for j in range(grid + 1)]
    rows = []
    for i in range(grid):
        r0, r1 = rb[i], max(rb[i + 1], rb[i] + 1)
        cols = []
        for j in range(grid):
            c0, c1 = cb[j], max(cb[j + 1], cb[j] + 1)
            cols.append(g[r0:r1, c0:c1].mean())
        rows.append(torch.stack(cols))
    return torch.stack(rows)


def _orientation_histogram(g01: torch.Tensor) -> torch.Tensor:
    p = torch.nn.functional.pad(g01[None, None], (1, 1, 1, 1), mode="replicate")[0, 0]
    gx = 0.5 * (p[1:-1, 2:] - p[1:-1, :-2])
    gy = 0.5 * (p[2:, 1:-1] - p[:-2, 1:-1])
    mag = torch.sqrt(gx * gx + gy * gy + 1e-12)
    theta = torch.atan2(gy, gx)
    centers = _t(
        -np.pi + (np.arange(M.SEMANTIC_ORIENT_BINS) + 0.5) * (2 * np.pi / M.SEMANTIC_ORIENT_BINS)
    )
    logits = M.SEMANTIC_ORIENT_KAPPA * torch.cos(theta[:, :, None] - centers)
    soft = torch.exp(logits - logits.max(dim=2, keepdim=True).values)
    soft = soft / soft.sum(dim=2, keepdim=True)
    hist = (mag[:, :, None] * soft).sum(dim=(0, 1))
    return hist / (mag.sum() + 1e-8)


def _semantic_embed(img: torch.Tensor, max_value: float) -> torch.Tensor:
    g01 = _grayscale(img) / max_value
    thumb = _grid_pool(g01, M.SEMANTIC_GRID).reshape(-1)
    means = img.mean(dim=(0, 1)) / max_value
    if means.shape[0] == 1:
        means = means.repeat(3)
    hist = _orientation_histogram(g01)
    v = torch.cat([thumb, means, hist, torch.ones(1)])
    return v / torch.linalg.norm(v)


def reference_invert_torch(x: torch.Tensor, inverter: ReferenceInverter, max_value: float) -> torch.Tensor:
    cfg = inverter.cfg
    if cfg.blur_sigma > 0:
        radius = int(np.ceil(3.0 * cfg.blur_sigma))
        k = _t(gaussian_kernel_1d(2 * radius + 1, cfg.blur_sigma))
        degraded = torch.stack(
            [_sep_filter_replicate(x[:, :, c], k) for c in range(x.shape[2])], dim=2
        )
    else:
        degraded = x
    if cfg.noise_sigma > 0:
        noise = _t(_noise_field(tuple(x.shape), cfg.noise_seed))
        degraded = degraded + noise * cfg.noise_sigma * max_value
    out = cfg.fidelity * x + (1.0 - cfg.fidelity) * degraded
    return torch.clamp(out, 0.0, max_value)


def attack_objective_torch(
    x_ref: ImageBuffer,
    x_adv: torch.Tensor,
    inverter: ReferenceInverter,
    w: WeightVector,
    ssim_cfg: SsimConfig,
) -> torch.Tensor:
    """A-index(x_ref, inverter(x_adv)) as a differentiable scalar."""
    mx = x_ref.max_value
    x_t = _t(x_ref.data)
    inv = reference_invert_torch(x_adv, inverter, mx)
    p = _psnr(x_t, inv, mx)
    s = _ssim(_grayscale(x_t), _grayscale(inv), mx, ssim_cfg)
    lp = _perceptual(_grayscale(x_t) / mx, _grayscale(inv) / mx)
    cs = torch.dot(_semantic_embed(x_t, mx), _semantic_embed(inv, mx))
    composite = w.alpha1 * p + w.alpha2 * s + w.alpha3 * (1.0 - lp) + w.alpha4 * cs
    return torch.sigmoid(-w.sigma * composite)


def analytic_gradient(
    x_adv: np.ndarray,
    x_ref: ImageBuffer,
    inverter: ReferenceInverter,
    w: WeightVector,
    ssim_cfg: SsimConfig,
) -> np.ndarray:
    xt = _t(x_adv).clone().requires_grad_(True)
    obj = attack_objective_torch(x_ref, xt, inverter, w, ssim_cfg)
    obj.backward()
    return xt.grad.detach().numpy()
