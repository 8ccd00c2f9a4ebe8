import numpy as np
import pytest
from fastapi.testclient import TestClient

from collapse_lab import __version__
from collapse_lab.service import create_app


@pytest.fixture(scope="module")
def client():
    return TestClient(create_app())


SMALL = {"n_traj": 150, "t_max": 0.2, "record_every": 0.05, "n_blocks": 5, "seed": 11}


def test_health(client):
    r = client.get("/v1/health")
    assert r.status_code == 200
    assert r.json() == {"status": "ok", "version": __version__}


def test_fig2_endpoint(client):
    r = client.post("/v1/scenarios/fig2", json=SMALL)
    assert r.status_code == 200
    body = r.json()
    assert body["scenario"] == "fig2"
    assert {t["name"] for t in body["tables"]} == {"fig2_frozen", "fig2_white"}
    cols = {c["name"]: c["values"] for c in body["tables"][0]["columns"]}
    assert cols["tJ"][0] == 0.0
    assert len(cols["s_td_nats"]) == len(cols["tJ"])
    assert body["config"]["n_traj"] == 150
    assert body["status"] in ("pass", "warn")


def test_born_endpoint(client):
    r = client.post("/v1/scenarios/born",
                    json={**SMALL, "t_max": 10.0, "record_every": 0.5})
    assert r.status_code == 200
    body = r.json()
    assert body["summary"]["counts"]["00"] + body["summary"]["counts"]["11"] \
        + body["summary"]["counts"]["unresolved"] == 150


def test_interrupt_endpoint(client):
    r = client.post("/v1/scenarios/interrupt", json={**SMALL, "t_interrupt": 0.1})
    assert r.status_code == 200
    assert r.json()["summary"]["post"]["s_td"] >= 0


def test_dephasing_endpoint(client):
    r = client.post("/v1/scenarios/dephasing", json={**SMALL, "gamma": 2.0})
    assert r.status_code == 200
    names = {t["name"] for t in r.json()["tables"]}
    assert names == {"dephasing_reference", "dephasing_white"}


def test_validation_schema_level(client):
    r = client.post("/v1/scenarios/fig2", json={**SMALL, "n_traj": 0})
    assert r.status_code == 422


def test_validation_model_level(client):
    r = client.post("/v1/scenarios/born", json={**SMALL, "noise": "ou"})
    assert r.status_code == 422
    assert "tau" in str(r.json()["detail"])


def test_validation_grid_level(client):
    # record_every < dt only surfaces when the ensemble config is built
    r = client.post("/v1/scenarios/fig2", json={**SMALL, "record_every": 1e-4})
    assert r.status_code == 422
    assert "record_every" in str(r.json()["detail"])


def test_unknown_field_rejected(client):
    r = client.post("/v1/scenarios/fig2", json={**SMALL, "bogus": 1})
    assert r.status_code == 422


def test_float_precision_round_trip(client):
    r = client.post("/v1/scenarios/fig2", json=SMALL)
    cols = {c["name"]: c["values"] for c in r.json()["tables"][0]["columns"]}
    # JSON floats must round-trip the server's doubles exactly
    v = cols["s_ent_avg_nats"][0]
    assert v == float(np.float64(v))
    assert abs(v - 0.5623351446188083) < 1e-12
