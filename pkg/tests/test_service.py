"""HTTP service: endpoint contracts, registry behaviour, error codes."""

import numpy as np
import pytest
from fastapi.testclient import TestClient

from tsbayes.service import create_app

pytestmark = pytest.mark.filterwarnings("ignore::RuntimeWarning")


def ar1_values(n=200, phi=0.5, seed=3):
    rng = np.random.default_rng(seed)
    y = np.empty(n)
    y[0] = rng.normal()
    for t in range(1, n):
        y[t] = phi * y[t - 1] + rng.normal()
    return y.tolist()


@pytest.fixture(scope="module")
def client():
    return TestClient(create_app())


@pytest.fixture(scope="module")
def fit_id(client):
    body = {
        "data": {"values": ar1_values(), "frequency": 1, "name": "y"},
        "model": {"family": "sarima", "order": [1, 0, 0]},
        "sampler": {"chains": 2, "iter": 300, "seed": 4},
    }
    resp = client.post("/models/fit", json=body)
    assert resp.status_code == 200
    return resp.json()["fit_id"]


class TestHealth:
    def test_ok(self, client):
        resp = client.get("/health")
        assert resp.status_code == 200
        assert resp.json()["status"] == "ok"


class TestFit:
    def test_response_shape(self, client, fit_id):
        resp = client.get(f"/fits/{fit_id}/summary")
        assert resp.status_code == 200
        body = resp.json()
        assert body["header"] == "y ~ Sarima(1,0,0)(0,0,0)[1]"
        names = [row["name"] for row in body["summary"]]
        assert names[0] == "mu0"
        assert names[-1] == "loglik"
        assert all(np.isfinite(row["rhat"]) for row in body["summary"])
        assert body["summary_text"].strip()

    def test_divergence_count_reported(self, client, fit_id):
        resp = client.get(f"/fits/{fit_id}/summary")
        assert resp.json()["divergences"] >= 0

    def test_listing(self, client, fit_id):
        resp = client.get("/fits")
        assert resp.status_code == 200
        assert fit_id in [f["fit_id"] for f in resp.json()["fits"]]

    def test_bad_model_400(self, client):
        body = {
            "data": {"values": ar1_values(60)},
            "model": {"family": "sarima", "order": [1, 0, 0], "fourier_k": 2},
        }
        resp = client.post("/models/fit", json=body)
        assert resp.status_code == 400

    def test_unknown_family_422(self, client):
        body = {
            "data": {"values": ar1_values(60)},
            "model": {"family": "varma", "order": [1, 0, 0]},
        }
        resp = client.post("/models/fit", json=body)
        assert resp.status_code == 422

    def test_malformed_body_422(self, client):
        resp = client.post("/models/fit", json={"data": {"values": [1.0]}})
        assert resp.status_code == 422

    def test_bad_prior_400(self, client):
        body = {
            "data": {"values": ar1_values(60)},
            "model": {"family": "sarima", "order": [1, 0, 0]},
            "priors": {"nothere": "normal(0,1)"},
        }
        resp = client.post("/models/fit", json=body)
        assert resp.status_code == 400
        assert "nothere" in resp.json()["detail"]


class TestForecast:
    def test_rows(self, client, fit_id):
        resp = client.post(f"/fits/{fit_id}/forecast",
                           json={"horizon": 8, "seed": 9})
        assert resp.status_code == 200
        rows = resp.json()["rows"]
        assert [r["horizon"] for r in rows] == list(range(1, 9))
        for r in rows:
            assert r["q5"] <= r["q50"] <= r["q95"]

    def test_seed_determinism(self, client, fit_id):
        a = client.post(f"/fits/{fit_id}/forecast", json={"horizon": 4, "seed": 2})
        b = client.post(f"/fits/{fit_id}/forecast", json={"horizon": 4, "seed": 2})
        assert a.json() == b.json()

    def test_unknown_fit_404(self, client):
        resp = client.post("/fits/fit-999/forecast", json={"horizon": 3})
        assert resp.status_code == 404

    def test_missing_xreg_future_400(self, client):
        body = {
            "data": {"values": ar1_values(80)},
            "model": {"family": "sarima", "order": [1, 0, 0],
                      "xreg": [[float(t)] for t in range(80)]},
            "sampler": {"chains": 1, "iter": 200, "seed": 1},
        }
        made = client.post("/models/fit", json=body)
        assert made.status_code == 200
        fid = made.json()["fit_id"]
        resp = client.post(f"/fits/{fid}/forecast", json={"horizon": 3})
        assert resp.status_code == 400
        ok = client.post(f"/fits/{fid}/forecast",
                         json={"horizon": 3,
                               "xreg_future": [[80.0], [81.0], [82.0]]})
        assert ok.status_code == 200

    def test_xreg_for_garch_400(self, client):
        body = {
            "data": {"values": ar1_values(80)},
            "model": {"family": "garch", "arch": 1,
                      "xreg": [[float(t)] for t in range(80)]},
        }
        resp = client.post("/models/fit", json=body)
        assert resp.status_code == 400


class TestAuto:
    def test_selects_order_and_fits(self, client):
        body = {
            "data": {"values": ar1_values(300), "frequency": 1},
            "sampler": {"chains": 1, "iter": 200, "seed": 6},
        }
        resp = client.post("/models/auto", json=body)
        assert resp.status_code == 200
        out = resp.json()
        assert len(out["selected_order"]) == 6
        assert out["search_trace"]
        assert all(set(c) == {"order", "bic", "converged"}
                   for c in out["search_trace"])
        assert out["fit_id"].startswith("fit-")


class TestCompare:
    def test_loo(self, client, fit_id):
        body = {
            "data": {"values": ar1_values()},
            "model": {"family": "sarima", "order": [0, 0, 1]},
            "sampler": {"chains": 2, "iter": 300, "seed": 4},
        }
        other = client.post("/models/fit", json=body).json()["fit_id"]
        resp = client.post("/compare",
                           json={"fit_ids": [fit_id, other], "method": "loo"})
        assert resp.status_code == 200
        assert "elpd_diff" in resp.json()["table"]

    def test_waic_and_bic(self, client, fit_id):
        body = {
            "data": {"values": ar1_values()},
            "model": {"family": "sarima", "order": [0, 0, 2]},
            "sampler": {"chains": 2, "iter": 300, "seed": 4},
        }
        other = client.post("/models/fit", json=body).json()["fit_id"]
        for method, token in (("waic", "elpd_waic"), ("bic", "bic")):
            resp = client.post("/compare",
                               json={"fit_ids": [fit_id, other],
                                     "method": method})
            assert resp.status_code == 200
            assert token in resp.json()["table"]

    def test_bf_line(self, client, fit_id):
        body = {
            "data": {"values": ar1_values()},
            "model": {"family": "sarima", "order": [2, 0, 0]},
            "sampler": {"chains": 2, "iter": 300, "seed": 4},
        }
        other = client.post("/models/fit", json=body).json()["fit_id"]
        resp = client.post("/compare",
                           json={"fit_ids": [fit_id, other], "method": "bf"})
        assert resp.status_code == 200
        out = resp.json()
        expected = f"Estimated log Bayes factor in favor of {fit_id} over {other}: "
        assert out["line"].startswith(expected)
        assert out["line"].endswith(f"{out['log_bayes_factor']:.5f}")

    def test_unknown_fit_404(self, client, fit_id):
        resp = client.post("/compare",
                           json={"fit_ids": [fit_id, "fit-777"], "method": "loo"})
        assert resp.status_code == 404


class TestDefaultPriors:
    def test_sarima(self, client):
        resp = client.get("/models/default-priors",
                          params={"family": "sarima", "p": 2, "d": 0, "q": 1})
        assert resp.status_code == 200
        body = resp.json()
        assert body["parameters"][0] == "mu0"
        assert sum(line.startswith("ar[") for line in body["priors"]) == 2

    def test_garch(self, client):
        resp = client.get("/models/default-priors",
                          params={"family": "garch", "arch": 1, "garch": 1})
        assert resp.status_code == 200
        assert any(line.startswith("arch[") for line in resp.json()["priors"])

    def test_unknown_family_400(self, client):
        resp = client.get("/models/default-priors", params={"family": "gp"})
        assert resp.status_code == 400
