import pytest
from fastapi.testclient import TestClient

from authindex import __version__
from authindex.index import PUBLISHED_WEIGHTS
from authindex.service import app
from authindex.service.handlers import default_weights, published_anchors

from conftest import natural_image, write_pair_manifest

client = TestClient(app, raise_server_exceptions=False)


def test_health():
    resp = client.get("/health")
    assert resp.status_code == 200
    assert resp.json() == {"status": "ok", "version": __version__}


def test_anchors_served():
    resp = client.get("/anchors")
    assert resp.status_code == 200
    body = resp.json()
    assert "threshold_registry" in body


def test_packaged_default_weights():
    assert default_weights() == PUBLISHED_WEIGHTS
    anchors = published_anchors()
    assert anchors["threshold_registry"]
    assert anchors["attacker_sim_anchor"]["n_candidates"] == 100


def test_score_endpoint(tmp_path, rng):
    img = natural_image(rng, 12, 12)
    entries = [{"id": "s0", "image": img, "inverted": img, "label": "fake"}]
    manifest = write_pair_manifest(tmp_path, entries)
    resp = client.post("/score", json={"manifest": str(manifest), "tau": 0.5})
    assert resp.status_code == 200
    body = resp.json()
    assert body["schema"] == "authindex.report.v1"
    assert body["records"][0]["a_index"] == pytest.approx(0.03841, abs=1e-4)
    assert body["records"][0]["verdict"] == "PlausiblyDeniable"


def test_score_endpoint_with_inverter(tmp_path, rng):
    entries = [{"id": "s0", "image": natural_image(rng, 12, 12), "label": "fake"}]
    manifest = write_pair_manifest(tmp_path, entries)
    resp = client.post(
        "/score",
        json={"manifest": str(manifest), "inverter": {"kind": "reference", "fidelity": 0.9}},
    )
    assert resp.status_code == 200
    assert resp.json()["summary"]["n_scored"] == 1


def test_report_endpoint():
    rows = [
        {"id": "a", "label": "real", "a_index": 0.9},
        {"id": "b", "label": "fake", "a_index": 0.1},
    ]
    resp = client.post("/report", json={"scores": rows, "tau": 0.5})
    assert resp.status_code == 200
    s = resp.json()["summary"]
    assert s["accuracy"] == 1.0 and s["auc"] == 1.0


def test_missing_manifest_is_422():
    resp = client.post("/score", json={"manifest": "/nonexistent/m.jsonl"})
    assert resp.status_code == 422
    assert resp.json()["error"] == "MissingFile"


def test_malformed_request_is_422():
    resp = client.post("/score", json={"tau": 0.5})  # manifest missing
    assert resp.status_code == 422


def test_bad_config_is_400(tmp_path, rng):
    entries = [{"id": "s0", "image": natural_image(rng, 12, 12), "label": "fake"}]
    manifest = write_pair_manifest(tmp_path, entries)
    resp = client.post(
        "/attack",
        json={"manifest": str(manifest), "tau": 0.5, "attack": {"epsilon": 0.5}},
    )
    assert resp.status_code in (400, 422)


def test_video_endpoint(tmp_path, rng):
    from authindex.imagecore import save_image
    import json as _json

    img = natural_image(rng, 12, 12)
    frames = []
    for j in range(3):
        p = tmp_path / f"f{j}.ppm"
        save_image(img, p)
        frames.append(p.name)
    manifest = tmp_path / "v.jsonl"
    manifest.write_text(_json.dumps({"id": "v0", "frames": frames, "label": "fake"}) + "\n")
    resp = client.post(
        "/video",
        json={"manifest": str(manifest), "sample_count": 2, "inverter": {"fidelity": 0.9}},
    )
    assert resp.status_code == 200
    row = resp.json()["records"][0]
    assert row["a_index"] == pytest.approx(row["frame_scores"][0], abs=1e-12)
