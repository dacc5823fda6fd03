import numpy as np
import pytest
from fastapi.testclient import TestClient

from latticelab.service.app import app


@pytest.fixture(scope="module")
def client():
    return TestClient(app, raise_server_exceptions=False)


def test_health(client):
    assert client.get("/health").json() == {"status": "ok"}


def test_predict_gaps_endpoint(client):
    r = client.post("/predict-gaps", json={"gamma": 1.8, "eps": 0.2})
    assert r.status_code == 200
    body = r.json()
    assert body["m"] == [1, 2]
    assert body["width"][0] == pytest.approx(0.36)


def test_resonance_endpoint(client):
    r = client.post("/resonance", json={"force": {"kind": "linear", "params": [2.25]},
                                        "c": 0.0, "gamma": 2.1})
    assert r.status_code == 200
    assert r.json()["m0"] == 1


def test_resonant_frequency_maps_to_422(client):
    r = client.post("/resonance", json={"force": {"kind": "linear", "params": [2.25]},
                                        "c": 0.0, "gamma": 3.0})
    assert r.status_code == 422
    assert r.json()["category"] == "precondition"


def test_density_endpoint(client):
    # endpoints read off the gamma = 1.8 experiment; the predicted gap level
    # comes out at gamma/2pi
    r = client.post("/density/solve", json={"endpoints": [-2.0425, -1.8816, -1.5382, 1.0],
                                            "n_grid": 31})
    assert r.status_code == 200
    body = r.json()
    assert body["sum_rule_defect"] < 1e-10
    assert len(body["J"]) == 31
    assert body["gap_constants"][0] == pytest.approx(1.8 / (2 * np.pi), abs=1e-4)


def test_linear_closed_form_endpoint(client):
    r = client.post("/linear/closed-form", json={
        "alpha": 2.25,
        "driver": {"a": 0.5, "gamma": 2.1, "eps": 0.2, "sin_amps": [1.0], "cos_amps": []},
        "n": [10, 11], "t": 100.0,
    })
    assert r.status_code == 200
    assert len(r.json()["x"]) == 2
    assert r.json()["thresholds"][0] == pytest.approx(3.0)


def test_experiment_run_endpoint(client, tmp_path):
    r = client.post("/experiments/run", json={
        "kind": "simulate",
        "force": {"kind": "toda"},
        "driver": {"a": 0.5, "gamma": 3.1, "eps": 0.2, "sin_amps": [1.0], "cos_amps": [0.0, 0.5]},
        "n_particles": 50, "dt": 2e-3, "t_end": 20.0, "window": [1, 5],
        "out_dir": str(tmp_path),
    })
    assert r.status_code == 200
    assert any("trajectory" in f for f in r.json()["files"])


def test_bad_experiment_maps_to_422(client, tmp_path):
    r = client.post("/experiments/run", json={
        "kind": "simulate", "n_particles": 20, "dt": 1e-2, "t_end": 100.0,
        "out_dir": str(tmp_path),
    })
    assert r.status_code == 422
    assert r.json()["category"] == "precondition"


def test_preset_endpoint(client, tmp_path):
    r = client.post("/experiments/preset", json={"name": "predict-gaps-1.8", "out_dir": str(tmp_path)})
    assert r.status_code == 200
    r2 = client.post("/experiments/preset", json={"name": "bogus"})
    assert r2.status_code == 422
