import base64
import io

import numpy as np
import pytest
from fastapi.testclient import TestClient
from PIL import Image

from glyphforge.data import generate_synthetic_dataset
from glyphforge.models import sample_style
from glyphforge.serve import ModelBundle, create_app
from glyphforge.train import TrainConfig, Trainer, save_checkpoint


@pytest.fixture(scope="module")
def bundle(tmp_path_factory):
    ds = generate_synthetic_dataset(3, 3, 16, seed=0)
    cfg = TrainConfig(image_size=16, num_classes=3, epochs=1, batch_size=4,
                      n_disc=1, base_channels=4, seed=0)
    trainer = Trainer(cfg, ds)
    trainer.run()
    path = tmp_path_factory.mktemp("ckpt") / "model.ggan"
    save_checkpoint(trainer, path)
    return ModelBundle.from_checkpoint(path)


@pytest.fixture
def client(bundle):
    return TestClient(create_app(bundle))


@pytest.fixture
def empty_client():
    return TestClient(create_app(None))


def decode_png(b64):
    return np.asarray(Image.open(io.BytesIO(base64.b64decode(b64))))


def test_info(client):
    r = client.get("/model/info")
    assert r.status_code == 200
    body = r.json()
    assert body["num_classes"] == 3
    assert body["style_dim"] == 100
    assert body["image_size"] == 16
    assert body["class_labels"][:3] == ["A", "B", "C"]


def test_info_stable_checkpoint_id(client):
    a = client.get("/model/info").json()["checkpoint_id"]
    b = client.get("/model/info").json()["checkpoint_id"]
    assert a == b


def test_info_no_model_503(empty_client):
    r = empty_client.get("/model/info")
    assert r.status_code == 503
    assert r.json()["detail"]["error"] == "no_model"


def test_generate_from_seed_all_classes(client):
    r = client.post("/generate", json={"seed": 42})
    assert r.status_code == 200
    body = r.json()
    assert len(body["style"]) == 100
    assert sorted(body["images"]) == ["0", "1", "2"]
    img = decode_png(body["images"]["0"])
    assert img.shape == (16, 16)
    # style echo matches the seed's uniform draw
    expected = np.random.default_rng(42).uniform(-1, 1, 100)
    np.testing.assert_allclose(body["style"], expected, atol=1e-6)


def test_generate_identical_requests_identical_bodies(client):
    payload = {"style": [0.0] * 100, "classes": [0, 2]}
    a = client.post("/generate", json=payload)
    b = client.post("/generate", json=payload)
    assert a.content == b.content
    assert sorted(a.json()["images"]) == ["0", "2"]


def test_generate_validation(client):
    assert client.post("/generate",
                       json={"style": [0.0] * 99}).status_code == 400
    assert client.post("/generate", json={}).status_code == 400
    assert client.post("/generate",
                       json={"seed": 1, "style": [0.0] * 100}).status_code == 400
    assert client.post("/generate",
                       json={"seed": 1, "classes": [7]}).status_code == 400


def test_interpolate_contract(client):
    z = [0.1] * 100
    r = client.post("/interpolate",
                    json={"anchors": [z, z], "steps": 4, "class_id": 1})
    assert r.status_code == 200
    frames = r.json()["frames"]
    assert len(frames) == 5
    assert all(f == frames[0] for f in frames)


def test_interpolate_endpoints_match_generate(client):
    rng = np.random.default_rng(1)
    a = sample_style(rng).tolist()
    b = sample_style(rng).tolist()
    r = client.post("/interpolate",
                    json={"anchors": [a, b], "steps": 3, "class_id": 0})
    frames = r.json()["frames"]
    direct_a = client.post("/generate",
                           json={"style": a, "classes": [0]}).json()
    direct_b = client.post("/generate",
                           json={"style": b, "classes": [0]}).json()
    assert frames[0] == direct_a["images"]["0"]
    assert frames[-1] == direct_b["images"]["0"]


def test_interpolate_validation(client):
    z = [0.0] * 100
    assert client.post("/interpolate",
                       json={"anchors": [z], "steps": 2}).status_code == 400
    assert client.post("/interpolate",
                       json={"anchors": [z, z], "steps": 0}).status_code == 400
    assert client.post("/interpolate",
                       json={"anchors": [z, z], "steps": 2,
                             "class_id": 9}).status_code == 400
