"""Pydantic request models shared by the HTTP service and the CLI client."""

from __future__ import annotations

from typing import List, Literal, Optional

from pydantic import BaseModel, Field


class WeightsModel(BaseModel):
    alpha1: float
    alpha2: float
    alpha3: float
    alpha4: float
    sigma: float = 0.9


class InverterModel(BaseModel):
    kind: Literal["reference", "external", "none"] = "reference"
    blur_sigma: float = 1.5
    noise_sigma: float = 0.01
    noise_seed: int = 0
    fidelity: float = 0.6


class SsimModel(BaseModel):
    window: int = 11
    gaussian_sigma: float = 1.5
    k1: float = 0.01
    k2: float = 0.03


class AttackModel(BaseModel):
    epsilon: float = 8.0 / 255.0
    step_size: Optional[float] = None
    iterations: int = 40
    direction: Literal["maximize", "minimize"] = "maximize"
    gradient_mode: Literal["analytic", "finite_difference"] = "analytic"
    fd_samples: int = 512
    rng_seed: int = 0
    ssim_window: int = 7


class DeModel(BaseModel):
    population: int = 20
    mutation_f: float = 0.6
    crossover_cr: float = 0.7
    max_iterations: int = 300
    tolerance: float = 1e-10
    rng_seed: int = 0


class ScoreRequest(BaseModel):
    manifest: str
    weights: Optional[WeightsModel] = None  # None -> packaged default weights
    tau: Optional[float] = None
    inverter: Optional[InverterModel] = None
    ssim: SsimModel = Field(default_factory=SsimModel)
    workers: int = 1


class CalibrateRequest(BaseModel):
    manifest_real: str
    manifest_fake: str
    de: DeModel = Field(default_factory=DeModel)
    fpr_target: float = 0.01
    sigma: float = 0.9
    attack: Optional[AttackModel] = None  # present -> also calibrate tau_security
    inverter: Optional[InverterModel] = None
    ssim: SsimModel = Field(default_factory=SsimModel)
    generator_tag: str = ""
    workers: int = 1


class AttackRequest(BaseModel):
    manifest: str
    weights: Optional[WeightsModel] = None
    tau: float
    attack: AttackModel = Field(default_factory=AttackModel)
    inverter: InverterModel = Field(default_factory=InverterModel)
    workers: int = 1


class AttackerSimRequest(BaseModel):
    manifest: str  # one record per candidate, ordered by seed index
    weights: Optional[WeightsModel] = None
    prompt_tag: str = ""
    tau_safety: Optional[float] = None
    tau_security: Optional[float] = None
    attack: AttackModel = Field(default_factory=AttackModel)
    inverter: InverterModel = Field(default_factory=InverterModel)


class VideoRequest(BaseModel):
    manifest: str
    weights: Optional[WeightsModel] = None
    tau: Optional[float] = None
    inverter: Optional[InverterModel] = None
    ssim: SsimModel = Field(default_factory=SsimModel)
    sample_count: int = 8
    workers: int = 1


class ReportRequest(BaseModel):
    scores: List[dict]
    tau: Optional[float] = None


class HealthResponse(BaseModel):
    status: str
    version: str
