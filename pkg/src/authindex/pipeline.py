"""End-to-end runs: ingestion, scoring, calibration, attack, attacker
simulation, and video scoring. This layer is shared by the CLI and the HTTP
service; every run is a pure function of its (echoed) configuration."""

from __future__ import annotations

import json
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import replace
from pathlib import Path
from typing import List, Optional, Sequence

from . import reports
from .adversary import AttackConfig, AttackerSimConfig, attacker_sim, pgd_attack
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
from .errors import AuthIndexError, LiveInverterRequired
from .imagecore import ImageBuffer, load_image
from .index import ScoreSample, WeightVector, a_index, composite_score
from .inverters import InverterHandle, PairRecord, ReferenceInverter, ReferenceInverterConfig, load_manifest
from .metrics import MetricVector, Providers, SsimConfig, metric_vector
from .video import load_video_manifest, plan_frames, video_a_index

_FULL_CHANNELS = {"psnr", "ssim", "lpips", "clip"}


def resolve_pair(rec: PairRecord, inverter: Optional[InverterHandle]) -> tuple:
    """(original, inverted) buffers for a record; precomputed-only records skip I/O."""
    if _FULL_CHANNELS <= rec.precomputed.keys():
        return None, None
    x = load_image(rec.original_path)
    if rec.inverted_path is not None:
        if inverter is not None:
            warnings.warn(
                f"record '{rec.record_id}': both an inverted file and an inverter are "
                "configured; the file wins"
            )
        x_inv = load_image(rec.inverted_path)
    elif inverter is not None:
        x_inv = inverter(x)
    else:
        raise LiveInverterRequired(
            f"record '{rec.record_id}' has no inverted image and no inverter is configured"
        )
    return x, x_inv


def record_metrics(
    rec: PairRecord,
    providers: Providers,
    inverter: Optional[InverterHandle],
    ssim_cfg: SsimConfig,
) -> MetricVector:
    x, x_inv = resolve_pair(rec, inverter)
    if x is None:
        return MetricVector(**{
            "psnr": rec.precomputed["psnr"],
            "ssim": rec.precomputed["ssim"],
            "lpips": rec.precomputed["lpips"],
            "clip_sim": rec.precomputed["clip"],
        })
    return metric_vector(x, x_inv, providers, ssim_cfg, precomputed=rec.precomputed)


def score_record(
    rec: PairRecord,
    w: WeightVector,
    providers: Providers = None,
    inverter: Optional[InverterHandle] = None,
    ssim_cfg: SsimConfig = SsimConfig(),
) -> ScoreSample:
    try:
        m = record_metrics(rec, providers or Providers.reference(), inverter, ssim_cfg)
    except AuthIndexError as exc:
        raise type(exc)(f"record '{rec.record_id}': {exc}") from exc
    s = composite_score(m, w)
    return ScoreSample(record_id=rec.record_id, label=rec.label, composite=s, a_index=a_index(s, w))


def _map_records(records, fn, workers: int):
    if workers <= 1:
        return [fn(r) for r in records]
    with ThreadPoolExecutor(max_workers=workers) as ex:
        return list(ex.map(fn, records))  # order follows input, not completion


def _score_rows(
    records: Sequence[PairRecord],
    w: WeightVector,
    providers: Providers,
    inverter,
    ssim_cfg: SsimConfig,
    tau: Optional[float],
    workers: int,
) -> List[dict]:
    def one(rec):
        row = {"id": rec.record_id, "label": rec.label}
        try:
            s = score_record(rec, w, providers, inverter, ssim_cfg)
        except AuthIndexError as exc:
            row["error"] = str(exc)
            return row
        row["composite"] = s.composite
        row["a_index"] = s.a_index
        if tau is not None:
            row["verdict"] = classify(s.a_index, tau).value
        return row

    return _map_records(records, one, workers)


def make_inverter(kind: str = "reference", **kwargs) -> Optional[InverterHandle]:
    if kind in (None, "none"):
        return None
    if kind == "reference":
        return ReferenceInverter(ReferenceInverterConfig(**kwargs))
    if kind == "external":
        # externally inverted pairs arrive via the manifest's inverted paths
        return None
    raise ValueError(f"unknown inverter kind '{kind}'")


def run_score(
    manifest: str,
    weights: WeightVector,
    tau: Optional[float] = None,
    inverter: Optional[InverterHandle] = None,
    ssim_cfg: SsimConfig = SsimConfig(),
    workers: int = 1,
) -> dict:
    records = load_manifest(manifest)
    config_echo = {
        "command": "score",
        "manifest": str(manifest),
        "weights": weights.to_dict(),
        "tau": tau,
        "inverter": getattr(inverter, "descriptor", None),
        "ssim": {"window": ssim_cfg.window, "sigma": ssim_cfg.gaussian_sigma},
        "workers": workers,
    }
    rows = _score_rows(records, weights, Providers.reference(), inverter, ssim_cfg, tau, workers)
    return reports.build_report("score", config_echo, rows, tau)


def run_calibrate(
    manifest_real: str,
    manifest_fake: str,
    de_cfg: DeConfig = DeConfig(),
    fpr_target: float = 0.01,
    sigma: float = 0.9,
    attack_cfg: Optional[AttackConfig] = None,
    inverter: Optional[InverterHandle] = None,
    ssim_cfg: SsimConfig = SsimConfig(),
    generator_tag: str = "",
    workers: int = 1,
) -> CalibrationResult:
    providers = Providers.reference()
    real_recs = load_manifest(manifest_real)
    fake_recs = load_manifest(manifest_fake)

    def metrics_of(recs):
        return _map_records(
            recs, lambda r: record_metrics(r, providers, inverter, ssim_cfg), workers
        )

    real_m = metrics_of(real_recs)
    fake_m = metrics_of(fake_recs)
    w = fit_weights(real_m, fake_m, de_cfg, sigma)

    def scores_of(recs, ms):
        out = []
        for rec, m in zip(recs, ms):
            s = composite_score(m, w)
            out.append(ScoreSample(rec.record_id, rec.label, s, a_index(s, w)))
        return out

    real_s = scores_of(real_recs, real_m)
    fake_s = scores_of(fake_recs, fake_m)
    overlap = overlap_estimate([s.a_index for s in real_s], [s.a_index for s in fake_s])
    tau_safety = calibrate_threshold([s.a_index for s in fake_s], fpr_target)

    tau_security = None
    if attack_cfg is not None:
        if inverter is None:
            raise LiveInverterRequired("security calibration needs a live inverter")
        atk_cfg = replace(attack_cfg, direction="maximize")

        def attacked(rec):
            x, _ = resolve_pair(rec, inverter)
            return pgd_attack(x, inverter, w, atk_cfg).a_index_after

        attacked_scores = _map_records(fake_recs, attacked, workers)
        tau_security = calibrate_security_threshold(attacked_scores, fpr_target)
    return CalibrationResult(
        weights=w,
        overlap=overlap,
        real_scores=real_s,
        fake_scores=fake_s,
        tau_safety=tau_safety,
        tau_security=tau_security,
        generator_tag=generator_tag,
        fpr_target=fpr_target,
    )


def run_attack(
    manifest: str,
    weights: WeightVector,
    tau: float,
    attack_cfg: AttackConfig,
    inverter: InverterHandle,
    workers: int = 1,
) -> dict:
    """Before/after classification and per-class attack success rates."""
    if inverter is None:
        raise LiveInverterRequired("the attack command needs a live inverter")
    records = load_manifest(manifest)
    ssim_cfg = attack_cfg.ssim_cfg
    config_echo = {
        "command": "attack",
        "manifest": str(manifest),
        "weights": weights.to_dict(),
        "tau": tau,
        "inverter": inverter.descriptor,
        "attack": {
            "epsilon": attack_cfg.epsilon,
            "step_size": attack_cfg.effective_step,
            "iterations": attack_cfg.iterations,
            "direction": attack_cfg.direction,
            "gradient_mode": attack_cfg.gradient_mode,
            "fd_samples": attack_cfg.fd_samples,
            "rng_seed": attack_cfg.rng_seed,
            "ssim_window": attack_cfg.ssim_window,
        },
        "workers": workers,
    }

    def one(rec):
        row = {"id": rec.record_id, "label": rec.label}
        try:
            x, _ = resolve_pair(rec, inverter)
            if x is None:
                raise LiveInverterRequired(
                    f"record '{rec.record_id}' is precomputed-only; the attack needs pixels"
                )
            res = pgd_attack(x, inverter, weights, attack_cfg)
        except AuthIndexError as exc:
            row["error"] = str(exc)
            return row
        row["a_index"] = res.a_index_before
        row["a_index_after"] = res.a_index_after
        row["linf_norm"] = res.linf_norm
        row["verdict"] = classify(res.a_index_before, tau).value
        row["verdict_after"] = classify(res.a_index_after, tau).value
        return row

    rows = _map_records(records, one, workers)
    report = reports.build_report("attack", config_echo, rows, tau)
    report["summary"]["attack"] = attack_summary(rows, tau)
    return report


def attack_summary(rows: List[dict], tau: float) -> dict:
    """ASR = flips among records that were correctly classified before the attack."""
    out = {}
    correct_verdict = {"real": Verdict.AUTHENTIC.value, "fake": Verdict.PLAUSIBLY_DENIABLE.value}
    for label in ("real", "fake"):
        sub = [r for r in rows if r.get("label") == label and "a_index" in r]
        initially_correct = [r for r in sub if r["verdict"] == correct_verdict[label]]
        flipped = [r for r in initially_correct if r["verdict_after"] != r["verdict"]]
        out[label] = {
            "n": len(sub),
            "initially_correct": len(initially_correct),
            "flipped": len(flipped),
            "asr": (len(flipped) / len(initially_correct)) if initially_correct else None,
        }
    scored = [r for r in rows if "a_index" in r]
    n = len(scored)
    if n:
        before_ok = sum(1 for r in scored if r["verdict"] == correct_verdict.get(r.get("label")))
        after_ok = sum(1 for r in scored if r["verdict_after"] == correct_verdict.get(r.get("label")))
        out["accuracy_before"] = before_ok / n
        out["accuracy_after"] = after_ok / n
    return out


def run_attacker_sim(
    manifest: str,
    weights: WeightVector,
    attack_cfg: AttackConfig,
    inverter: InverterHandle,
    prompt_tag: str = "",
    tau_safety: Optional[float] = None,
    tau_security: Optional[float] = None,
) -> dict:
    """Candidates are the manifest records in order; seed index i maps to record i."""
    records = load_manifest(manifest)
    buffers = {}

    def source(i: int) -> ImageBuffer:
        if i not in buffers:
            buffers[i] = load_image(records[i].original_path)
        return buffers[i]

    sim_cfg = AttackerSimConfig(n_candidates=len(records), candidate_source=source, refine=attack_cfg)
    rep = attacker_sim(prompt_tag, sim_cfg, weights, inverter, tau_safety, tau_security)
    out = rep.to_dict()
    out["schema"] = "authindex.attacker_sim.v1"
    out["config_echo"] = {
        "command": "attacker-sim",
        "manifest": str(manifest),
        "weights": weights.to_dict(),
        "tau_safety": tau_safety,
        "tau_security": tau_security,
        "inverter": inverter.descriptor,
        "iterations": attack_cfg.iterations,
        "epsilon": attack_cfg.epsilon,
        "rng_seed": attack_cfg.rng_seed,
    }
    out["selected_record_id"] = records[rep.selected_index].record_id
    return out


def run_video(
    manifest: str,
    weights: WeightVector,
    tau: Optional[float] = None,
    inverter: Optional[InverterHandle] = None,
    ssim_cfg: SsimConfig = SsimConfig(),
    sample_count: int = 8,
    workers: int = 1,
) -> dict:
    videos = load_video_manifest(manifest)
    inverter = inverter or ReferenceInverter()
    providers = Providers.reference()
    config_echo = {
        "command": "video",
        "manifest": str(manifest),
        "weights": weights.to_dict(),
        "tau": tau,
        "inverter": inverter.descriptor,
        "sample_count": sample_count,
        "ssim": {"window": ssim_cfg.window, "sigma": ssim_cfg.gaussian_sigma},
        "workers": workers,
    }

    def one(vid):
        row = {"id": vid.record_id, "label": vid.label}
        try:
            plan = plan_frames(len(vid.frame_paths), sample_count)
            frame_scores = []
            for idx in plan.indices:
                x = load_image(vid.frame_paths[idx])
                frame_scores.append(
                    a_index(
                        composite_score(metric_vector(x, inverter(x), providers, ssim_cfg), weights),
                        weights,
                    )
                )
        except AuthIndexError as exc:
            row["error"] = str(exc)
            return row
        row["frame_indices"] = list(plan.indices)
        row["frame_scores"] = frame_scores
        row["a_index"] = video_a_index(frame_scores)
        if tau is not None:
            row["verdict"] = classify(row["a_index"], tau).value
        return row

    rows = _map_records(videos, one, workers)
    return reports.build_report("video", config_echo, rows, tau)


def run_report(scores: List[dict], tau: Optional[float] = None) -> dict:
    """Recompute a summary from an existing per-record score table."""
    config_echo = {"command": "report", "tau": tau, "n_rows": len(scores)}
    rows = []
    for r in scores:
        row = dict(r)
        if tau is not None and "a_index" in row:
            row["verdict"] = classify(float(row["a_index"]), tau).value
        rows.append(row)
    return reports.build_report("report", config_echo, rows, tau)


def load_weights_file(path) -> WeightVector:
    return WeightVector.from_dict(json.loads(Path(path).read_text()))


def load_thresholds_file(path, generator: Optional[str] = None) -> dict:
    """Threshold file: either {"tau_safety":..} or a registry keyed by generator tag."""
    obj = json.loads(Path(path).read_text())
    if "tau_safety" in obj:
        return obj
    if generator is None:
        raise ValueError("threshold registry requires a generator tag")
    if generator not in obj:
        raise ValueError(f"generator '{generator}' not in threshold registry")
    entry = obj[generator]
    return entry if isinstance(entry, dict) else {"tau_safety": entry}
