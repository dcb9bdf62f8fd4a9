import json

import numpy as np
import pytest

from authindex.imagecore import ImageBuffer, save_image
from authindex.inverters import ReferenceInverter, ReferenceInverterConfig


def natural_image(rng, h=16, w=16, c=3, lo=0.15, hi=0.85):
    """Smooth random image with natural-ish statistics, away from the clamp."""
    from scipy.ndimage import gaussian_filter

    raw = rng.standard_normal((h, w, c))
    smooth = gaussian_filter(raw, sigma=(2.0, 2.0, 0))
    span = smooth.max() - smooth.min()
    unit = (smooth - smooth.min()) / (span if span > 0 else 1.0)
    return ImageBuffer((lo + (hi - lo) * unit) * 255.0)


def add_noise(img, sigma_frac, rng):
    noisy = img.data + rng.standard_normal(img.data.shape) * sigma_frac * img.max_value
    return ImageBuffer(np.clip(noisy, 0.0, img.max_value), img.max_value)


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


def write_pair_manifest(tmp_path, entries, name="manifest.jsonl"):
    """entries: list of dicts with keys image/inverted (ImageBuffer or None), label, id, ..."""
    lines = []
    for e in entries:
        rec = {"id": e["id"]}
        if "image" in e and e["image"] is not None:
            p = tmp_path / f"{e['id']}.ppm"
            save_image(e["image"], p)
            rec["original"] = p.name
        else:
            rec["original"] = e.get("original", f"{e['id']}.ppm")
        if e.get("inverted") is not None:
            p = tmp_path / f"{e['id']}_inv.ppm"
            save_image(e["inverted"], p)
            rec["inverted"] = p.name
        rec["label"] = e.get("label", "fake")
        rec["generator"] = e.get("generator", "testgen")
        if "precomputed" in e:
            rec["precomputed"] = e["precomputed"]
        lines.append(json.dumps(rec))
    path = tmp_path / name
    path.write_text("\n".join(lines) + "\n")
    return path


def separable_corpus(tmp_path, rng, n_per_class=24, size=16):
    """Real pairs degrade heavily (hard to invert), fake pairs barely (easy)."""
    inv_easy = ReferenceInverter(ReferenceInverterConfig(blur_sigma=1.0, noise_sigma=0.01, noise_seed=5, fidelity=0.95))
    inv_hard = ReferenceInverter(ReferenceInverterConfig(blur_sigma=2.5, noise_sigma=0.08, noise_seed=6, fidelity=0.3))
    reals, fakes = [], []
    for i in range(n_per_class):
        xr = natural_image(rng, size, size)
        xf = natural_image(rng, size, size)
        reals.append({"id": f"real{i}", "image": xr, "inverted": inv_hard(xr), "label": "real"})
        fakes.append({"id": f"fake{i}", "image": xf, "inverted": inv_easy(xf), "label": "fake"})
    m_real = write_pair_manifest(tmp_path, reals, "real.jsonl")
    m_fake = write_pair_manifest(tmp_path, fakes, "fake.jsonl")
    return m_real, m_fake
