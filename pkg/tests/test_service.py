import pytest
from fastapi.testclient import TestClient

from precoder_sim import __version__
from precoder_sim.service import app

client = TestClient(app)

MANIFEST = "n_t = 16\nseed = 3\nnum_users = 1\npattern = contiguous\nslots = 1\n"


def test_health():
    r = client.get("/health")
    assert r.status_code == 200
    assert r.json() == {"status": "ok", "version": __version__}


def test_run_with_inline_manifest():
    r = client.post("/run", json={"manifest_text": MANIFEST})
    assert r.status_code == 200
    body = r.json()
    assert body["passed"] is True
    (slot,) = body["slots"]
    assert slot["slot_id"] == 0
    assert slot["cycles"] == "107019.5"
    assert slot["us"] == "428.078000"
    assert slot["deadline"] is True
    assert slot["err"] == 0
    assert len(slot["checksum"]) == 64
    assert body["report_text"].endswith("result=PASS\n")


def test_run_wants_exactly_one_source(tmp_path):
    r = client.post("/run", json={})
    assert r.status_code == 400
    assert "exactly one" in r.json()["detail"]
    r = client.post(
        "/run",
        json={"manifest_path": str(tmp_path / "m.txt"), "manifest_text": MANIFEST},
    )
    assert r.status_code == 400


def test_run_reports_manifest_errors():
    r = client.post("/run", json={"manifest_text": "bogus = 1\nnum_users = 1\n"})
    assert r.status_code == 400
    assert "unknown manifest keys" in r.json()["detail"]


def test_generate_then_run_by_path(tmp_path):
    r = client.post(
        "/generate",
        json={
            "out_dir": str(tmp_path),
            "seed": 9,
            "users": 2,
            "pattern": "contiguous",
            "slots": 1,
            "overrides": ["n_t=16"],
        },
    )
    assert r.status_code == 200
    body = r.json()
    # 2 control + 2*8 coefficient + 14 IQ frames
    assert body["num_frames"] == 32
    r = client.post("/run", json={"manifest_path": body["manifest_path"]})
    assert r.status_code == 200
    assert r.json()["passed"] is True


def test_generate_rejects_bad_pattern(tmp_path):
    r = client.post(
        "/generate", json={"out_dir": str(tmp_path), "users": 1, "pattern": "woven"}
    )
    assert r.status_code == 400
    assert "pattern" in r.json()["detail"]


def test_verify_endpoint():
    r = client.post(
        "/verify",
        json={"manifest_text": "n_t = 16\nnum_users = 2\npattern = random\n"},
    )
    assert r.status_code == 200
    body = r.json()
    assert body["passed"] is True
    assert body["max_int_error"] == 0
    assert 0.0 < body["max_float_error"] <= body["bound"]
    assert "int_error=0 float_error=" in body["report_text"]


def test_timing_defaults_to_worst_case():
    r = client.post("/timing", json={})
    assert r.status_code == 200
    body = r.json()
    assert body["report"]["slot_cycles"] == "107019.5"
    assert body["report"]["slot_us"] == "428.078000"
    assert body["report"]["deadline_met"] is True
    assert body["report"]["n_mult_total"] == 45864
    assert body["report"]["dsp_estimate"] == 768  # n_t=64 default
    assert "slot_cycles=107019.5" in body["text"]


def test_timing_overrides_and_config_text():
    r = client.post("/timing", json={"overrides": ["n_t=16"]})
    assert r.json()["report"]["dsp_estimate"] == 192
    # a 5 ns clock misses the 500 us boundary
    r = client.post("/timing", json={"config_text": "t_clk_ns = 5\n"})
    assert r.status_code == 200
    assert r.json()["report"]["deadline_met"] is False


def test_timing_config_path(tmp_path):
    cfg = tmp_path / "cfg.txt"
    cfg.write_text("n_t = 32\n")
    r = client.post("/timing", json={"config_path": str(cfg)})
    assert r.status_code == 200
    assert r.json()["report"]["dsp_estimate"] == 384
    r = client.post("/timing", json={"config_path": str(tmp_path / "absent.txt")})
    assert r.status_code == 400
    assert "cannot read config" in r.json()["detail"]


def test_timing_rejects_two_sources(tmp_path):
    cfg = tmp_path / "cfg.txt"
    cfg.write_text("n_t = 32\n")
    r = client.post(
        "/timing", json={"config_path": str(cfg), "config_text": "n_t = 16\n"}
    )
    assert r.status_code == 400
    assert "at most one" in r.json()["detail"]


@pytest.mark.parametrize("endpoint", ["/run", "/verify"])
def test_missing_manifest_file_is_400(endpoint, tmp_path):
    r = client.post(endpoint, json={"manifest_path": str(tmp_path / "gone.txt")})
    assert r.status_code == 400
    assert "cannot read manifest" in r.json()["detail"]
