import pytest
from fastapi.testclient import TestClient

from geoperm.service import Engine, create_app
from geoperm.simgen import SimConfig, simulate_genotypes, simulate_trait


@pytest.fixture
def client():
    engine = Engine()
    return TestClient(create_app(engine)), engine


@pytest.fixture(scope="module")
def payload():
    cfg = SimConfig(n=30, p=40, theta=0.08, seed=3, qtl_index=9, qtl_effect=1.3)
    g = simulate_genotypes(cfg)
    tr = simulate_trait(g, cfg)
    return {"genotypes": g.matrix.tolist(), "trait": tr.values.tolist()}


def test_health(client):
    c, _ = client
    assert c.get("/healthz").json()["status"] == "ok"


def test_estimate_n4(client):
    c, _ = client
    body = {"genotypes": [[0, 0, 1, 1]], "trait": [0, 0, 1, 1]}
    res = c.post("/v1/estimate", json=body)
    assert res.status_code == 200
    assert res.json()["estimate"] == pytest.approx(1 / 3)


def test_count_table_cached_across_traits(client, payload):
    c, engine = client
    first = c.post("/v1/estimate", json=payload | {"samples_per_radius": 200}).json()
    assert len(engine._counts) == 1
    other = payload | {"trait": list(reversed(payload["trait"])), "samples_per_radius": 200}
    c.post("/v1/estimate", json=other)
    assert len(engine._counts) == 1
    again = c.post("/v1/estimate", json=payload | {"samples_per_radius": 200}).json()
    first.pop("seconds"), again.pop("seconds")
    assert first == again


def test_permute_and_compare(client, payload):
    c, _ = client
    res = c.post("/v1/permute", json=payload | {"max_perms": 300, "seed": 2})
    assert res.status_code == 200 and res.json()["n_perms"] == 300
    assert c.post("/v1/permute", json=payload).status_code == 422
    assert c.post("/v1/permute", json=payload | {"max_perms": 10, "adaptive": True}).status_code == 422
    res = c.post("/v1/compare", json=payload | {"samples_per_radius": 200}).json()
    assert res["estimate"]["alpha"] == res["permutation"]["alpha"]


def test_validation_errors(client):
    c, _ = client
    assert c.post("/v1/estimate", json={"genotypes": [[0, 1, 1]], "trait": [1.0, 2.0]}).status_code == 422
    assert c.post("/v1/estimate", json={"genotypes": [[0, 2, 1]], "trait": [1.0, 2.0, 3.0]}).status_code == 422
    assert c.post("/v1/estimate", json={"genotypes": [[0, 1, 1]], "trait": [1.0, 1.0, 1.0]}).status_code == 422
    assert c.post("/v1/efftests", json={"pairs": [[1e-5, 1e-3]]}).status_code == 422


def test_efftests(client):
    c, _ = client
    pairs = [[10.0 ** -k, 100 * 10.0 ** -k] for k in range(4, 10)]
    res = c.post("/v1/efftests", json={"pairs": pairs}).json()
    assert res["kappa"] == pytest.approx(1.0, abs=1e-6)
    assert res["effective_tests"]["0.001"] == pytest.approx(100.0, rel=1e-6)
