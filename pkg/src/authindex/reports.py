"""Run report assembly: per-record score tables, summaries, and binned
densities. JSON-first; rendering is left to external tooling."""

from __future__ import annotations

import csv
import hashlib
import json
from pathlib import Path
from typing import List, Optional, Sequence

import numpy as np

HISTOGRAM_BINS = 64


def run_id_for(config_echo: dict) -> str:
    blob = json.dumps(config_echo, sort_keys=True).encode()
    return hashlib.sha256(blob).hexdigest()[:12]


def histogram_counts(values: Sequence[float]) -> List[int]:
    counts, _ = np.histogram(np.asarray(values, dtype=np.float64), bins=HISTOGRAM_BINS, range=(0.0, 1.0))
    return counts.tolist()


def auc_rank(real_scores: Sequence[float], fake_scores: Sequence[float]) -> float:
    """Rank-sum AUC for the convention 'real scores higher than fake'."""
    real = np.asarray(real_scores, dtype=np.float64)
    fake = np.asarray(fake_scores, dtype=np.float64)
    if len(real) == 0 or len(fake) == 0:
        return float("nan")
    greater = (real[:, None] > fake[None, :]).sum()
    ties = (real[:, None] == fake[None, :]).sum()
    return float((greater + 0.5 * ties) / (len(real) * len(fake)))


def summarize_rows(rows: List[dict], tau: Optional[float]) -> dict:
    """Summary counts recomputable from the per-record rows."""
    scored = [r for r in rows if "a_index" in r]
    by_label = {"real": [], "fake": []}
    for r in scored:
        if r.get("label") in by_label:
            by_label[r["label"]].append(r["a_index"])
    summary = {
        "n_records": len(rows),
        "n_scored": len(scored),
        "n_errors": len(rows) - len(scored),
        "n_real": len(by_label["real"]),
        "n_fake": len(by_label["fake"]),
    }
    if by_label["real"] and by_label["fake"]:
        summary["auc"] = auc_rank(by_label["real"], by_label["fake"])
    if tau is not None:
        counts = {}
        for label in ("real", "fake"):
            vals = by_label[label]
            auth = sum(1 for v in vals if v >= tau)
            counts[label] = {"authentic": auth, "plausibly_deniable": len(vals) - auth}
        summary["tau"] = tau
        summary["counts"] = counts
        n_real, n_fake = len(by_label["real"]), len(by_label["fake"])
        tp = counts["real"]["authentic"]
        fp = counts["fake"]["authentic"]
        if n_real + n_fake:
            summary["accuracy"] = (tp + counts["fake"]["plausibly_deniable"]) / (n_real + n_fake)
        summary["precision"] = tp / (tp + fp) if (tp + fp) else None
        summary["recall"] = tp / n_real if n_real else None
        summary["fpr"] = fp / n_fake if n_fake else None
        p, r = summary["precision"], summary["recall"]
        summary["f1"] = (2 * p * r / (p + r)) if p and r else None
    return summary


def build_report(command: str, config_echo: dict, rows: List[dict], tau: Optional[float]) -> dict:
    scored = [r for r in rows if "a_index" in r]
    hist = {
        label: histogram_counts([r["a_index"] for r in scored if r.get("label") == label])
        for label in ("real", "fake")
    }
    return {
        "schema": "authindex.report.v1",
        "run_id": run_id_for(config_echo),
        "command": command,
        "config_echo": config_echo,
        "records": rows,
        "summary": summarize_rows(rows, tau),
        "histogram": hist,
    }


def write_report(report: dict, out_path, csv_path=None) -> None:
    Path(out_path).write_text(json.dumps(report, indent=2, sort_keys=False) + "\n", encoding="utf-8")
    if csv_path:
        write_score_csv(report["records"], csv_path)


def write_score_csv(rows: List[dict], csv_path) -> None:
    cols = sorted({k for r in rows for k in r})
    # stable, readable column order for the common fields
    front = [c for c in ("id", "label", "composite", "a_index", "verdict", "error") if c in cols]
    cols = front + [c for c in cols if c not in front]
    with open(csv_path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.DictWriter(fh, fieldnames=cols)
        writer.writeheader()
        for r in rows:
            writer.writerow({k: r.get(k, "") for k in cols})
