"""Request-model to pipeline glue. The FastAPI routes and the CLI both call
these functions, so local runs and served runs execute identical code."""

from __future__ import annotations

import json
from importlib import resources

from ..adversary import AttackConfig
from ..calibrate import DeConfig
from ..index import WeightVector
from ..metrics import SsimConfig
from .. import pipeline
from .models import (
    AttackerSimRequest,
    AttackRequest,
    CalibrateRequest,
    ReportRequest,
    ScoreRequest,
    VideoRequest,
)


def default_weights() -> WeightVector:
    raw = resources.files("authindex.data").joinpath("default_weights.json").read_text()
    return WeightVector.from_dict(json.loads(raw))


def published_anchors() -> dict:
    raw = resources.files("authindex.data").joinpath("published_anchors.json").read_text()
    return json.loads(raw)


def _weights(model) -> WeightVector:
    if model is None:
        return default_weights()
    return WeightVector(model.alpha1, model.alpha2, model.alpha3, model.alpha4, model.sigma)


def _inverter(model):
    if model is None:
        return None
    if model.kind in ("none", "external"):
        return pipeline.make_inverter(model.kind)
    return pipeline.make_inverter(
        "reference",
        blur_sigma=model.blur_sigma,
        noise_sigma=model.noise_sigma,
        noise_seed=model.noise_seed,
        fidelity=model.fidelity,
    )


def _ssim(model) -> SsimConfig:
    return SsimConfig(model.window, model.gaussian_sigma, model.k1, model.k2)


def _attack(model) -> AttackConfig:
    return AttackConfig(
        epsilon=model.epsilon,
        step_size=model.step_size,
        iterations=model.iterations,
        direction=model.direction,
        gradient_mode=model.gradient_mode,
        fd_samples=model.fd_samples,
        rng_seed=model.rng_seed,
        ssim_window=model.ssim_window,
    )


def handle_score(req: ScoreRequest) -> dict:
    return pipeline.run_score(
        req.manifest,
        _weights(req.weights),
        tau=req.tau,
        inverter=_inverter(req.inverter),
        ssim_cfg=_ssim(req.ssim),
        workers=req.workers,
    )


def handle_calibrate(req: CalibrateRequest) -> dict:
    de_cfg = DeConfig(
        population=req.de.population,
        mutation_f=req.de.mutation_f,
        crossover_cr=req.de.crossover_cr,
        max_iterations=req.de.max_iterations,
        tolerance=req.de.tolerance,
        rng_seed=req.de.rng_seed,
    )
    result = pipeline.run_calibrate(
        req.manifest_real,
        req.manifest_fake,
        de_cfg=de_cfg,
        fpr_target=req.fpr_target,
        sigma=req.sigma,
        attack_cfg=_attack(req.attack) if req.attack is not None else None,
        inverter=_inverter(req.inverter),
        ssim_cfg=_ssim(req.ssim),
        generator_tag=req.generator_tag,
        workers=req.workers,
    )
    return result.to_dict()


def handle_attack(req: AttackRequest) -> dict:
    return pipeline.run_attack(
        req.manifest,
        _weights(req.weights),
        tau=req.tau,
        attack_cfg=_attack(req.attack),
        inverter=_inverter(req.inverter),
        workers=req.workers,
    )


def handle_attacker_sim(req: AttackerSimRequest) -> dict:
    return pipeline.run_attacker_sim(
        req.manifest,
        _weights(req.weights),
        attack_cfg=_attack(req.attack),
        inverter=_inverter(req.inverter),
        prompt_tag=req.prompt_tag,
        tau_safety=req.tau_safety,
        tau_security=req.tau_security,
    )


def handle_video(req: VideoRequest) -> dict:
    return pipeline.run_video(
        req.manifest,
        _weights(req.weights),
        tau=req.tau,
        inverter=_inverter(req.inverter),
        ssim_cfg=_ssim(req.ssim),
        sample_count=req.sample_count,
        workers=req.workers,
    )


def handle_report(req: ReportRequest) -> dict:
    return pipeline.run_report(req.scores, tau=req.tau)
