"""Command-line client. Runs in-process by default; with --server it posts the
same request bodies to a running service instance (paths are then resolved on
the server's filesystem)."""

from __future__ import annotations

import csv
import json
from pathlib import Path

import click

from .errors import AuthIndexError
from .reports import write_score_csv
from .service import handlers
from .service.models import (
    AttackerSimRequest,
    AttackModel,
    AttackRequest,
    CalibrateRequest,
    DeModel,
    InverterModel,
    ReportRequest,
    ScoreRequest,
    VideoRequest,
    WeightsModel,
)

_ENDPOINTS = {
    ScoreRequest: ("/score", handlers.handle_score),
    CalibrateRequest: ("/calibrate", handlers.handle_calibrate),
    AttackRequest: ("/attack", handlers.handle_attack),
    AttackerSimRequest: ("/attacker-sim", handlers.handle_attacker_sim),
    VideoRequest: ("/video", handlers.handle_video),
    ReportRequest: ("/report", handlers.handle_report),
}


def _execute(req, server: str | None) -> dict:
    path, handler = _ENDPOINTS[type(req)]
    if server:
        import httpx

        resp = httpx.post(server.rstrip("/") + path, json=req.model_dump(), timeout=None)
        if resp.status_code != 200:
            raise click.UsageError(f"server returned {resp.status_code}: {resp.text}")
        return resp.json()
    return handler(req)


def _emit(result: dict, out: str | None, csv_out: str | None) -> None:
    text = json.dumps(result, indent=2) + "\n"
    if out:
        Path(out).write_text(text, encoding="utf-8")
        click.echo(f"wrote {out}")
    else:
        click.echo(text, nl=False)
    if csv_out and "records" in result:
        write_score_csv(result["records"], csv_out)
        click.echo(f"wrote {csv_out}")


def _finish(result: dict) -> None:
    summary = result.get("summary", {})
    if summary.get("n_records", 0) > 0 and summary.get("n_scored", 0) == 0:
        raise SystemExit(1)  # every record failed


def _weights_model(path: str | None) -> WeightsModel | None:
    if path is None:
        return None
    try:
        return WeightsModel(**json.loads(Path(path).read_text()))
    except (OSError, ValueError) as exc:
        raise click.UsageError(f"bad weights file {path}: {exc}")


def _thresholds(path: str | None, generator: str | None) -> dict:
    if path is None:
        return {}
    from .pipeline import load_thresholds_file

    try:
        return load_thresholds_file(path, generator)
    except (OSError, ValueError) as exc:
        raise click.UsageError(f"bad thresholds file {path}: {exc}")


def _inverter_model(kind, fidelity, blur, noise, seed) -> InverterModel | None:
    if kind == "none":
        return None
    return InverterModel(
        kind=kind, fidelity=fidelity, blur_sigma=blur, noise_sigma=noise, noise_seed=seed
    )


def common_options(fn):
    fn = click.option("--server", default=None, help="Base URL of a running authindex service.")(fn)
    fn = click.option("--out", default=None, help="Write the JSON report here (default stdout).")(fn)
    fn = click.option("--workers", default=1, show_default=True, type=int)(fn)
    return fn


def inverter_options(fn):
    fn = click.option(
        "--inverter", "inverter_kind",
        type=click.Choice(["reference", "external", "none"]), default="reference",
        show_default=True,
        help="'external' means inverted images come from the manifest files.",
    )(fn)
    fn = click.option("--ref-fidelity", default=0.6, show_default=True, type=float)(fn)
    fn = click.option("--ref-blur", default=1.5, show_default=True, type=float)(fn)
    fn = click.option("--ref-noise", default=0.01, show_default=True, type=float)(fn)
    fn = click.option("--seed", default=0, show_default=True, type=int)(fn)
    return fn


def attack_options(fn):
    fn = click.option("--epsilon", default=8.0 / 255.0, show_default=True, type=float)(fn)
    fn = click.option("--iterations", default=40, show_default=True, type=int)(fn)
    fn = click.option(
        "--direction", type=click.Choice(["maximize", "minimize"]), default="maximize",
        show_default=True,
    )(fn)
    fn = click.option(
        "--gradient-mode", type=click.Choice(["analytic", "finite_difference"]),
        default="analytic", show_default=True,
    )(fn)
    fn = click.option("--ssim-window", default=7, show_default=True, type=int)(fn)
    return fn


@click.group()
def main():
    """Authenticity-index scoring, calibration, and robustness toolkit."""


@main.command()
@click.option("--manifest", required=True, type=click.Path())
@click.option("--weights", "weights_file", default=None, type=click.Path())
@click.option("--thresholds", "thresholds_file", default=None, type=click.Path())
@click.option("--generator", default=None, help="Registry key when --thresholds is a registry.")
@click.option("--tau", default=None, type=float, help="Explicit threshold (overrides --thresholds).")
@click.option("--csv", "csv_out", default=None, type=click.Path())
@inverter_options
@common_options
def score(manifest, weights_file, thresholds_file, generator, tau, csv_out,
          inverter_kind, ref_fidelity, ref_blur, ref_noise, seed, server, out, workers):
    """Score every pair in a manifest and classify against a threshold."""
    if tau is None:
        tau = _thresholds(thresholds_file, generator).get("tau_safety")
    req = ScoreRequest(
        manifest=manifest,
        weights=_weights_model(weights_file),
        tau=tau,
        inverter=_inverter_model(inverter_kind, ref_fidelity, ref_blur, ref_noise, seed),
        workers=workers,
    )
    result = _run(req, server)
    _emit(result, out, csv_out)
    _finish(result)


@main.command()
@click.option("--manifest-real", required=True, type=click.Path())
@click.option("--manifest-fake", required=True, type=click.Path())
@click.option("--fpr", default=0.01, show_default=True, type=float)
@click.option("--sigma", default=0.9, show_default=True, type=float)
@click.option("--generations", default=300, show_default=True, type=int)
@click.option("--population", default=20, show_default=True, type=int)
@click.option("--generator", "generator_tag", default="", help="Tag stored with the result.")
@click.option("--with-attack/--no-attack", default=False,
              help="Also run the maximize attack on fakes and calibrate tau_security.")
@click.option("--iterations", default=40, show_default=True, type=int)
@click.option("--epsilon", default=8.0 / 255.0, show_default=True, type=float)
@inverter_options
@common_options
def calibrate(manifest_real, manifest_fake, fpr, sigma, generations, population, generator_tag,
              with_attack, iterations, epsilon, inverter_kind, ref_fidelity, ref_blur, ref_noise,
              seed, server, out, workers):
    """Fit metric weights by differential evolution and calibrate thresholds."""
    req = CalibrateRequest(
        manifest_real=manifest_real,
        manifest_fake=manifest_fake,
        de=DeModel(max_iterations=generations, population=population, rng_seed=seed),
        fpr_target=fpr,
        sigma=sigma,
        attack=AttackModel(iterations=iterations, epsilon=epsilon, rng_seed=seed)
        if with_attack else None,
        inverter=_inverter_model(inverter_kind, ref_fidelity, ref_blur, ref_noise, seed),
        generator_tag=generator_tag,
        workers=workers,
    )
    _emit(_run(req, server), out, None)


@main.command()
@click.option("--manifest", required=True, type=click.Path())
@click.option("--weights", "weights_file", default=None, type=click.Path())
@click.option("--thresholds", "thresholds_file", default=None, type=click.Path())
@click.option("--generator", default=None)
@click.option("--tau", default=None, type=float)
@click.option("--csv", "csv_out", default=None, type=click.Path())
@attack_options
@inverter_options
@common_options
def attack(manifest, weights_file, thresholds_file, generator, tau, csv_out,
           epsilon, iterations, direction, gradient_mode, ssim_window,
           inverter_kind, ref_fidelity, ref_blur, ref_noise, seed, server, out, workers):
    """PGD-attack every record and report before/after classification."""
    if tau is None:
        tau = _thresholds(thresholds_file, generator).get("tau_safety")
    if tau is None:
        raise click.UsageError("attack needs --tau or --thresholds")
    req = AttackRequest(
        manifest=manifest,
        weights=_weights_model(weights_file),
        tau=tau,
        attack=AttackModel(
            epsilon=epsilon, iterations=iterations, direction=direction,
            gradient_mode=gradient_mode, rng_seed=seed, ssim_window=ssim_window,
        ),
        inverter=_inverter_model(inverter_kind, ref_fidelity, ref_blur, ref_noise, seed)
        or InverterModel(),
        workers=workers,
    )
    result = _run(req, server)
    _emit(result, out, csv_out)
    _finish(result)


@main.command("attacker-sim")
@click.option("--manifest", required=True, type=click.Path(),
              help="Candidate pool; record i is the candidate for seed index i.")
@click.option("--weights", "weights_file", default=None, type=click.Path())
@click.option("--thresholds", "thresholds_file", default=None, type=click.Path())
@click.option("--generator", default=None)
@click.option("--prompt-tag", default="")
@attack_options
@inverter_options
@common_options
def attacker_sim(manifest, weights_file, thresholds_file, generator, prompt_tag,
                 epsilon, iterations, direction, gradient_mode, ssim_window,
                 inverter_kind, ref_fidelity, ref_blur, ref_noise, seed, server, out, workers):
    """Pick the best-scoring candidate and adversarially refine it."""
    thr = _thresholds(thresholds_file, generator)
    req = AttackerSimRequest(
        manifest=manifest,
        weights=_weights_model(weights_file),
        prompt_tag=prompt_tag,
        tau_safety=thr.get("tau_safety"),
        tau_security=thr.get("tau_security"),
        attack=AttackModel(
            epsilon=epsilon, iterations=iterations, gradient_mode=gradient_mode,
            rng_seed=seed, ssim_window=ssim_window,
        ),
        inverter=_inverter_model(inverter_kind, ref_fidelity, ref_blur, ref_noise, seed)
        or InverterModel(),
    )
    _emit(_run(req, server), out, None)


@main.command()
@click.option("--manifest", required=True, type=click.Path())
@click.option("--weights", "weights_file", default=None, type=click.Path())
@click.option("--thresholds", "thresholds_file", default=None, type=click.Path())
@click.option("--generator", default=None)
@click.option("--tau", default=None, type=float)
@click.option("--frames", "sample_count", default=8, show_default=True, type=int)
@click.option("--csv", "csv_out", default=None, type=click.Path())
@inverter_options
@common_options
def video(manifest, weights_file, thresholds_file, generator, tau, sample_count, csv_out,
          inverter_kind, ref_fidelity, ref_blur, ref_noise, seed, server, out, workers):
    """Score videos by frame sampling and mean aggregation."""
    if tau is None:
        tau = _thresholds(thresholds_file, generator).get("tau_safety")
    req = VideoRequest(
        manifest=manifest,
        weights=_weights_model(weights_file),
        tau=tau,
        inverter=_inverter_model(inverter_kind, ref_fidelity, ref_blur, ref_noise, seed),
        sample_count=sample_count,
        workers=workers,
    )
    result = _run(req, server)
    _emit(result, out, csv_out)
    _finish(result)


@main.command()
@click.option("--scores", "scores_file", required=True, type=click.Path(),
              help="Existing score table: report JSON or a per-record CSV.")
@click.option("--thresholds", "thresholds_file", default=None, type=click.Path())
@click.option("--generator", default=None)
@click.option("--tau", default=None, type=float)
@click.option("--server", default=None)
@click.option("--out", default=None)
def report(scores_file, thresholds_file, generator, tau, server, out):
    """Recompute summary statistics from an existing score table."""
    if tau is None:
        tau = _thresholds(thresholds_file, generator).get("tau_safety")
    rows = _load_score_rows(scores_file)
    req = ReportRequest(scores=rows, tau=tau)
    _emit(_run(req, server), out, None)


def _load_score_rows(path: str) -> list[dict]:
    p = Path(path)
    if p.suffix.lower() == ".csv":
        with open(p, newline="", encoding="utf-8") as fh:
            rows = []
            for raw in csv.DictReader(fh):
                row = {k: v for k, v in raw.items() if v not in ("", None)}
                for k in ("composite", "a_index", "a_index_after", "linf_norm"):
                    if k in row:
                        row[k] = float(row[k])
                rows.append(row)
            return rows
    obj = json.loads(p.read_text())
    return obj["records"] if isinstance(obj, dict) else obj


def _run(req, server):
    try:
        return _execute(req, server)
    except AuthIndexError as exc:
        raise click.UsageError(str(exc))


if __name__ == "__main__":
    main()
