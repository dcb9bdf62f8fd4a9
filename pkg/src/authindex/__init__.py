"""Authenticity-index calibration and robustness toolkit."""

from .imagecore import ImageBuffer, load_image, resize_bilinear, save_image, to_grayscale
from .index import PUBLISHED_WEIGHTS, ScoreSample, WeightVector, a_index, composite_score
from .metrics import MetricVector, Providers, SsimConfig, metric_vector, psnr, ssim
from .calibrate import (
    CalibrationResult,
    DeConfig,
    Verdict,
    calibrate_security_threshold,
    calibrate_threshold,
    classify,
    fit_weights,
    overlap_estimate,
)
from .inverters import (
    PairRecord,
    ReferenceInverter,
    ReferenceInverterConfig,
    feature_discrepancy,
    load_manifest,
    reference_invert,
    write_manifest,
)
from .adversary import AttackConfig, AttackResult, attacker_sim, gradient, pgd_attack
from .video import FramePlan, plan_frames, video_a_index

__version__ = "0.1.0"
