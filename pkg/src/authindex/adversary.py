"""l-infinity bounded projected-gradient attack through the inversion pipeline,
the gradient engine (analytic / coordinate finite differences), and the
medium-resource attacker protocol."""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Callable, List, Optional

import numpy as np

from .errors import EmptyCandidateSet, NonDifferentiableInverter
from .imagecore import ImageBuffer
from .index import WeightVector, a_index, composite_score
from .inverters import InverterHandle, ReferenceInverter
from .metrics import Providers, SsimConfig, metric_vector

FD_STEP_DIVISOR = 1024.0


@dataclass(frozen=True)
class AttackConfig:
    epsilon: float = 8.0 / 255.0  # fraction of MAX_I
    step_size: Optional[float] = None  # defaults to epsilon / 4
    iterations: int = 40
    direction: str = "maximize"  # or "minimize"
    gradient_mode: str = "analytic"  # or "finite_difference"
    fd_samples: int = 512
    rng_seed: int = 0
    ssim_window: int = 7  # metric window used inside the attack objective

    def __post_init__(self):
        if self.epsilon <= 0 or self.epsilon > 64.0 / 255.0:
            raise ValueError("epsilon must be in (0, 64/255]")
        step = self.step_size if self.step_size is not None else self.epsilon / 4.0
        if step <= 0 or step > 2.0 * self.epsilon:
            raise ValueError("step_size must be in (0, 2*epsilon]")
        if self.iterations < 0:
            raise ValueError("iterations must be non-negative")
        if self.direction not in ("maximize", "minimize"):
            raise ValueError("direction must be 'maximize' or 'minimize'")
        if self.gradient_mode not in ("analytic", "finite_difference"):
            raise ValueError("gradient_mode must be 'analytic' or 'finite_difference'")
        if self.fd_samples < 1:
            raise ValueError("fd_samples must be positive")

    @property
    def effective_step(self) -> float:
        return self.step_size if self.step_size is not None else self.epsilon / 4.0

    @property
    def ssim_cfg(self) -> SsimConfig:
        return SsimConfig(window=self.ssim_window)


@dataclass
class AttackResult:
    delta: np.ndarray
    a_index_before: float
    a_index_after: float
    objective_trace: List[float]
    linf_norm: float  # fraction of MAX_I


def attack_objective(
    x_ref: ImageBuffer,
    x_adv: ImageBuffer,
    inverter: InverterHandle,
    w: WeightVector,
    ssim_cfg: SsimConfig,
) -> float:
    """A-index(x_ref, inverter(x_adv)) on the reference-provider pipeline."""
    m = metric_vector(x_ref, inverter(x_adv), Providers.reference(), ssim_cfg)
    return a_index(composite_score(m, w), w)


def gradient(
    x_plus_delta: ImageBuffer,
    x_ref: ImageBuffer,
    inverter: InverterHandle,
    w: WeightVector,
    mode: str = "analytic",
    fd_samples: int = 512,
    seed: int = 0,
    ssim_cfg: SsimConfig = SsimConfig(window=7),
) -> np.ndarray:
    """d A-index / d x_plus_delta, as an image-shaped array."""
    if mode == "analytic":
        if not getattr(inverter, "differentiable", False) or not isinstance(inverter, ReferenceInverter):
            raise NonDifferentiableInverter(
                f"analytic gradients need the differentiable reference inverter, "
                f"got {getattr(inverter, 'descriptor', type(inverter).__name__)}"
            )
        from .torchpath import analytic_gradient

        return analytic_gradient(x_plus_delta.data, x_ref, inverter, w, ssim_cfg)

    # central finite differences on a seeded coordinate sample
    base = x_plus_delta.data
    n = base.size
    rng = np.random.default_rng(seed)
    if fd_samples >= n:
        coords = np.arange(n)
    else:
        coords = np.sort(rng.choice(n, size=fd_samples, replace=False))
    h = x_ref.max_value / FD_STEP_DIVISOR
    grad = np.zeros(n)
    flat = base.ravel()
    def _probe(c, offset):
        probe = flat.copy()
        # probes stay inside the valid range; at the boundary this degrades to
        # a one-sided estimate, matching the zero-subgradient clamp convention
        probe[c] = np.clip(probe[c] + offset, 0.0, x_ref.max_value)
        return attack_objective(
            x_ref, ImageBuffer(probe.reshape(base.shape), x_ref.max_value), inverter, w, ssim_cfg
        )

    for c in coords:
        grad[c] = (_probe(c, +h) - _probe(c, -h)) / (2.0 * h)
    return grad.reshape(base.shape)


def pgd_attack(
    x: ImageBuffer,
    inverter: InverterHandle,
    w: WeightVector,
    cfg: AttackConfig = AttackConfig(),
    debug_asserts: bool = False,
) -> AttackResult:
    """Sign-gradient PGD with post-step l-inf projection and pixel clamping.

    The best iterate by objective (including the unperturbed start) is returned,
    so `a_index_after` is never worse than `a_index_before` in the chosen
    direction.
    """
    mx = x.max_value
    eps_abs = cfg.epsilon * mx
    step_abs = cfg.effective_step * mx
    sign = 1.0 if cfg.direction == "maximize" else -1.0
    ssim_cfg = cfg.ssim_cfg

    before = attack_objective(x, x, inverter, w, ssim_cfg)
    delta = np.zeros_like(x.data)
    best_obj, best_delta = before, delta.copy()
    trace: List[float] = []
    for it in range(cfg.iterations):
        x_adv = ImageBuffer(np.clip(x.data + delta, 0.0, mx), mx)
        g = gradient(
            x_adv, x, inverter, w,
            mode=cfg.gradient_mode, fd_samples=cfg.fd_samples,
            seed=cfg.rng_seed + it, ssim_cfg=ssim_cfg,
        )
        delta = np.clip(delta + sign * step_abs * np.sign(g), -eps_abs, eps_abs)
        clamped = np.clip(x.data + delta, 0.0, mx)
        delta = clamped - x.data
        if debug_asserts:
            assert np.max(np.abs(delta)) <= eps_abs + 1e-12
            assert clamped.min() >= 0.0 and clamped.max() <= mx
        obj = attack_objective(x, ImageBuffer(clamped, mx), inverter, w, ssim_cfg)
        trace.append(obj)
        if (obj - best_obj) * sign > 0:
            best_obj, best_delta = obj, delta.copy()
    return AttackResult(
        delta=best_delta,
        a_index_before=before,
        a_index_after=best_obj,
        objective_trace=trace,
        linf_norm=float(np.max(np.abs(best_delta)) / mx),
    )


@dataclass(frozen=True)
class AttackerSimConfig:
    n_candidates: int = 100
    candidate_source: Callable[[int], ImageBuffer] = None
    refine: AttackConfig = field(default_factory=AttackConfig)

    def __post_init__(self):
        if self.n_candidates < 1:
            raise ValueError("n_candidates must be >= 1")


@dataclass
class AttackerSimReport:
    prompt_tag: str
    selected_index: int
    candidate_scores: List[float]
    selected_score: float
    refined_score: float
    clears_tau_safety: Optional[bool] = None
    clears_tau_security: Optional[bool] = None

    def to_dict(self) -> dict:
        return {
            "prompt_tag": self.prompt_tag,
            "selected_index": self.selected_index,
            "candidate_scores": self.candidate_scores,
            "selected_score": self.selected_score,
            "refined_score": self.refined_score,
            "clears_tau_safety": self.clears_tau_safety,
            "clears_tau_security": self.clears_tau_security,
        }


def attacker_sim(
    prompt_tag: str,
    cfg: AttackerSimConfig,
    w: WeightVector,
    inverter: InverterHandle,
    tau_safety: Optional[float] = None,
    tau_security: Optional[float] = None,
) -> AttackerSimReport:
    """Medium-resource attacker: sample N candidates by seed, pick the argmax
    A-index (ties to the lowest seed index), refine the winner with PGD."""
    if cfg.candidate_source is None or cfg.n_candidates < 1:
        raise EmptyCandidateSet("attacker_sim needs a candidate source and n_candidates >= 1")
    ssim_cfg = cfg.refine.ssim_cfg
    scores = []
    for i in range(cfg.n_candidates):
        cand = cfg.candidate_source(i)
        scores.append(attack_objective(cand, cand, inverter, w, ssim_cfg))
    best_i = int(np.argmax(scores))  # argmax keeps the first (lowest index) on ties
    winner = cfg.candidate_source(best_i)
    refine_cfg = replace(cfg.refine, direction="maximize")
    result = pgd_attack(winner, inverter, w, refine_cfg)
    return AttackerSimReport(
        prompt_tag=prompt_tag,
        selected_index=best_i,
        candidate_scores=[float(s) for s in scores],
        selected_score=float(scores[best_i]),
        refined_score=result.a_index_after,
        clears_tau_safety=None if tau_safety is None else result.a_index_after >= tau_safety,
        clears_tau_security=None if tau_security is None else result.a_index_after >= tau_security,
    )
