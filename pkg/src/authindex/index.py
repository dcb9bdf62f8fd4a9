"""Composite similarity score and the sigmoid-calibrated authenticity index."""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from typing import Optional

import numpy as np
from scipy.special import expit

from .metrics import MetricVector

ALPHA_BOUND = 10.0


@dataclass(frozen=True)
class WeightVector:
    alpha1: float  # PSNR weight, per dB
    alpha2: float  # SSIM weight
    alpha3: float  # (1 - LPIPS) weight
    alpha4: float  # CLIP cosine weight
    sigma: float = 0.9  # sigmoid scale

    def __post_init__(self):
        for a in (self.alpha1, self.alpha2, self.alpha3, self.alpha4):
            if not -ALPHA_BOUND <= a <= ALPHA_BOUND:
                raise ValueError(f"alpha {a} outside [-{ALPHA_BOUND}, {ALPHA_BOUND}]")
        if self.sigma <= 0:
            raise ValueError("sigma must be positive")

    @property
    def alphas(self) -> np.ndarray:
        return np.array([self.alpha1, self.alpha2, self.alpha3, self.alpha4])

    def to_dict(self) -> dict:
        return {
            "alpha1": self.alpha1,
            "alpha2": self.alpha2,
            "alpha3": self.alpha3,
            "alpha4": self.alpha4,
            "sigma": self.sigma,
        }

    @staticmethod
    def from_dict(d: dict) -> "WeightVector":
        return WeightVector(
            float(d["alpha1"]), float(d["alpha2"]), float(d["alpha3"]), float(d["alpha4"]),
            float(d.get("sigma", 0.9)),
        )


# weights published alongside the method, fitted on the authors' corpus
PUBLISHED_WEIGHTS = WeightVector(-0.0181, 1.380, -4.058, 8.066, 0.9)


class Label(str, Enum):
    REAL = "real"
    FAKE = "fake"


@dataclass(frozen=True)
class ScoreSample:
    record_id: str
    label: Optional[Label]
    composite: float
    a_index: float


def composite_score(m: MetricVector, w: WeightVector) -> float:
    """alpha1*psnr + alpha2*ssim + alpha3*(1 - lpips) + alpha4*clip."""
    return float(w.alphas @ m.as_features())


def a_index(s, w: WeightVector):
    """1 / (1 + exp(sigma * s)); low for easily inverted (high-similarity) content.

    Accepts scalars or arrays; stable for |sigma*s| up to ~700.
    """
    out = expit(-w.sigma * np.asarray(s, dtype=np.float64))
    return float(out) if out.ndim == 0 else out


def a_index_batch(features: np.ndarray, w: WeightVector) -> np.ndarray:
    """Vectorized index over rows of (psnr, ssim, 1-lpips, clip) features."""
    return expit(-w.sigma * (features @ w.alphas))


def score_metric_vector(record_id: str, label, m: MetricVector, w: WeightVector) -> ScoreSample:
    s = composite_score(m, w)
    return ScoreSample(record_id=record_id, label=label, composite=s, a_index=a_index(s, w))
