"""JSON API over the numerical services."""

import sys, os
sys.path.insert(0, os.path.join(os.path.dirname(__file__), ".."))

import pytest

from lamespec import create_app


@pytest.fixture
def client():
    app = create_app()
    app.config["TESTING"] = True
    return app.test_client()


class TestSeriesRoute:
    def test_coefficients(self, client):
        r = client.get("/api/series?m=0&kmax=3")
        assert r.status_code == 200
        body = r.get_json()
        assert body["success"]
        assert body["series"]["coeffs"] == ["10/3", "80/3", "1360/27", "20800/243"]
        assert body["series"]["units"] == "pi^2"

    def test_payload_keeps_field_order(self, client):
        body = client.get("/api/series?m=0&kmax=1").get_json()
        assert list(body["series"]) == ["n", "m", "k_max", "units", "coeffs"]

    def test_bad_kmax(self, client):
        r = client.get("/api/series?kmax=ten")
        assert r.status_code == 400
        assert not r.get_json()["success"]

    def test_kmax_above_limit(self, client):
        assert client.get("/api/series?kmax=1000").status_code == 400


class TestRadiusRoute:
    def test_short_series_is_unprocessable(self, client):
        r = client.get("/api/radius?m=0&kmax=4")
        assert r.status_code == 422
        assert "usable coefficients" in r.get_json()["error"]


class TestWpEvalRoute:
    def test_values(self, client):
        r = client.get("/api/wp-eval?q=0.2,0&x=0.31,0.05")
        assert r.status_code == 200
        v = r.get_json()["values"]
        assert v["q"] == [0.2, 0.0]
        assert len(v["e"]) == 3
        assert abs(sum(e[0] for e in v["e"])) < 1e-9

    def test_pole(self, client):
        assert client.get("/api/wp-eval?x=0,0").status_code == 422

    def test_bad_nome(self, client):
        assert client.get("/api/wp-eval?q=abc").status_code == 400


class TestClassifyRoute:
    def test_missing_q(self, client):
        r = client.post("/api/classify", json={})
        assert r.status_code == 400
        assert r.get_json()["error"] == "No q provided"

    def test_zero_nome(self, client):
        assert client.post("/api/classify", json={"q": [0, 0]}).status_code == 400

    def test_coincidence(self, client):
        r = client.post("/api/classify", json={"q": [0.0, 0.328106]})
        assert r.status_code == 200
        body = r.get_json()
        assert body["candidate"]["class"] == "e1"
        assert body["coincidence_gap"] >= 0
