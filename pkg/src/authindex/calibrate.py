"""Weight fitting by differential evolution against the distribution-overlap
objective, KDE overlap estimation, and FPR-controlled threshold selection."""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum
from typing import List, Optional, Sequence

import numpy as np

from .errors import DegenerateObjective, InsufficientSamples
from .index import ALPHA_BOUND, ScoreSample, WeightVector, a_index_batch
from .metrics import MetricVector

KDE_GRID_POINTS = 512
KDE_PAD_BANDWIDTHS = 3.0
MIN_CLASS_SAMPLES = 10


@dataclass(frozen=True)
class DeConfig:
    population: int = 20
    mutation_f: float = 0.6
    crossover_cr: float = 0.7
    max_iterations: int = 300
    bounds: tuple = ((-ALPHA_BOUND, ALPHA_BOUND),) * 4
    tolerance: float = 1e-10
    rng_seed: int = 0

    def __post_init__(self):
        if self.population < 4:
            raise ValueError("population must be >= 4 for rand/1 mutation")
        if not 0 < self.mutation_f < 2:
            raise ValueError("mutation_f must be in (0, 2)")
        if not 0 <= self.crossover_cr <= 1:
            raise ValueError("crossover_cr must be in [0, 1]")
        for lo, hi in self.bounds:
            if lo >= hi:
                raise ValueError("malformed bounds")


class Verdict(str, Enum):
    AUTHENTIC = "Authentic"
    PLAUSIBLY_DENIABLE = "PlausiblyDeniable"


@dataclass
class CalibrationResult:
    weights: WeightVector
    overlap: float
    real_scores: List[ScoreSample]
    fake_scores: List[ScoreSample]
    tau_safety: float
    tau_security: Optional[float]
    generator_tag: str
    fpr_target: float

    def to_dict(self) -> dict:
        return {
            "schema": "authindex.calibration.v1",
            "generator": self.generator_tag,
            "weights": self.weights.to_dict(),
            "overlap": self.overlap,
            "tau_safety": self.tau_safety,
            "tau_security": self.tau_security,
            "fpr_target": self.fpr_target,
            "n_real": len(self.real_scores),
            "n_fake": len(self.fake_scores),
            "real_scores": [s.a_index for s in self.real_scores],
            "fake_scores": [s.a_index for s in self.fake_scores],
        }


def silverman_bandwidth(samples: np.ndarray) -> float:
    n = len(samples)
    std = float(np.std(samples))
    bw = 1.06 * std * n ** (-1 / 5)
    if bw <= 0:
        bw = max(1e-9, 1e-3 * max(abs(float(np.mean(samples))), 1.0))
    return bw


def _kde_on_grid(samples: np.ndarray, bw: float, grid: np.ndarray) -> np.ndarray:
    z = (grid[:, None] - samples[None, :]) / bw
    dens = np.exp(-0.5 * z * z).sum(axis=1) / (len(samples) * bw * math.sqrt(2 * math.pi))
    return dens


def overlap_estimate(scores_a: Sequence[float], scores_b: Sequence[float]) -> float:
    """Integral of min of the two Gaussian KDEs on a shared grid, clamped to [0, 1]."""
    a = np.asarray(scores_a, dtype=np.float64)
    b = np.asarray(scores_b, dtype=np.float64)
    if len(a) < MIN_CLASS_SAMPLES or len(b) < MIN_CLASS_SAMPLES:
        raise InsufficientSamples(
            f"overlap_estimate needs >= {MIN_CLASS_SAMPLES} samples per list, got {len(a)}/{len(b)}"
        )
    bw_a, bw_b = silverman_bandwidth(a), silverman_bandwidth(b)
    pooled = 0.5 * (bw_a + bw_b)
    lo = min(a.min(), b.min()) - KDE_PAD_BANDWIDTHS * pooled
    hi = max(a.max(), b.max()) + KDE_PAD_BANDWIDTHS * pooled
    grid = np.linspace(lo, hi, KDE_GRID_POINTS)
    m = np.minimum(_kde_on_grid(a, bw_a, grid), _kde_on_grid(b, bw_b, grid))
    return float(np.clip(np.trapezoid(m, grid), 0.0, 1.0))


def histogram_overlap(scores_a: Sequence[float], scores_b: Sequence[float], bins: int = 64) -> float:
    """Histogram-min estimate of the same integral; test-only cross-check."""
    a = np.asarray(scores_a, dtype=np.float64)
    b = np.asarray(scores_b, dtype=np.float64)
    lo, hi = min(a.min(), b.min()), max(a.max(), b.max())
    if hi <= lo:
        return 1.0
    edges = np.linspace(lo, hi, bins + 1)
    pa, _ = np.histogram(a, bins=edges, density=True)
    pb, _ = np.histogram(b, bins=edges, density=True)
    return float(np.minimum(pa, pb).sum() * (edges[1] - edges[0]))


def _features(metrics: Sequence[MetricVector]) -> np.ndarray:
    return np.stack([m.as_features() for m in metrics])


def fit_weights(
    real_metrics: Sequence[MetricVector],
    fake_metrics: Sequence[MetricVector],
    cfg: DeConfig = DeConfig(),
    sigma: float = 0.9,
    history_out: Optional[list] = None,
) -> WeightVector:
    """DE/rand/1/bin over the four alphas, minimizing score-distribution overlap.

    Deterministic for a fixed seed: one RNG drives initialization, mutation and
    crossover in a fixed order.
    """
    if len(real_metrics) < MIN_CLASS_SAMPLES or len(fake_metrics) < MIN_CLASS_SAMPLES:
        raise InsufficientSamples(
            f"fit_weights needs >= {MIN_CLASS_SAMPLES} samples per class, "
            f"got {len(real_metrics)}/{len(fake_metrics)}"
        )
    feats_real = _features(real_metrics)
    feats_fake = _features(fake_metrics)
    lo = np.array([b[0] for b in cfg.bounds])
    hi = np.array([b[1] for b in cfg.bounds])
    dim = len(cfg.bounds)
    rng = np.random.default_rng(cfg.rng_seed)

    def objective(alphas: np.ndarray) -> float:
        w = WeightVector(*alphas, sigma=sigma)
        return overlap_estimate(a_index_batch(feats_real, w), a_index_batch(feats_fake, w))

    pop = lo + rng.random((cfg.population, dim)) * (hi - lo)
    obj = np.array([objective(p) for p in pop])
    flat_streak = 0
    prev_best = None
    for _ in range(cfg.max_iterations):
        for i in range(cfg.population):
            idx = [j for j in range(cfg.population) if j != i]
            r1, r2, r3 = rng.choice(idx, size=3, replace=False)
            mutant = np.clip(pop[r1] + cfg.mutation_f * (pop[r2] - pop[r3]), lo, hi)
            cross = rng.random(dim) < cfg.crossover_cr
            cross[rng.integers(dim)] = True  # at least one mutant coordinate
            trial = np.where(cross, mutant, pop[i])
            f_trial = objective(trial)
            if f_trial <= obj[i]:
                pop[i], obj[i] = trial, f_trial
        best = float(obj.min())
        if history_out is not None:
            history_out.append(best)
        if prev_best is not None and best == prev_best and best >= 0.99:
            flat_streak += 1
            if flat_streak >= 3:
                raise DegenerateObjective(
                    "overlap pinned at ~1.0 for 3 generations; classes are inseparable"
                )
        else:
            flat_streak = 0
        prev_best = best
        if float(obj.max() - obj.min()) < cfg.tolerance:
            break
    best_i = int(np.argmin(obj))
    return WeightVector(*(float(v) for v in pop[best_i]), sigma=sigma)


def calibrate_threshold(fake_scores: Sequence[float], fpr_target: float) -> float:
    """Smallest tau (among observed values or max+ulp) with strict-above FPR <= target."""
    if not 0 < fpr_target < 1:
        raise ValueError("fpr_target must be in (0, 1)")
    scores = np.sort(np.asarray(fake_scores, dtype=np.float64))
    n = len(scores)
    if n < math.ceil(1.0 / fpr_target):
        raise InsufficientSamples(
            f"need >= {math.ceil(1.0 / fpr_target)} fake scores for fpr {fpr_target}, got {n}"
        )
    budget = fpr_target * n
    candidates = np.concatenate([np.unique(scores), [np.nextafter(scores[-1], np.inf)]])
    for tau in candidates:
        if np.count_nonzero(scores > tau) <= budget:
            return float(tau)
    return float(candidates[-1])  # pragma: no cover - last candidate always satisfies


def calibrate_security_threshold(attacked_fake_scores: Sequence[float], fpr_target: float) -> float:
    """Same quantile rule applied to the post-attack fake score distribution."""
    return calibrate_threshold(attacked_fake_scores, fpr_target)


def classify(a_index_value: float, tau: float) -> Verdict:
    return Verdict.AUTHENTIC if a_index_value >= tau else Verdict.PLAUSIBLY_DENIABLE
