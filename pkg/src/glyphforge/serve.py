"""HTTP inference service over a loaded checkpoint.

Stateless JSON API consumed by the style explorer UI:
  GET  /model/info     -> model metadata
  POST /generate       -> per-class base64 PNGs from a style or a seed
  POST /interpolate    -> interpolation frames between anchor styles
"""
from __future__ import annotations

import base64
import hashlib
import io
from pathlib import Path

import numpy as np
from fastapi import FastAPI, HTTPException
from fastapi.middleware.cors import CORSMiddleware
from PIL import Image

from .evaluation import interpolate_styles
from .models import STYLE_DIM, Generator, assemble_latent_batch
from .train import load_generator


class ModelBundle:
    """Read-only generator plus metadata shared by all requests."""

    def __init__(self, generator: Generator, checkpoint_id: str):
        self.generator = generator
        self.checkpoint_id = checkpoint_id

    @classmethod
    def from_checkpoint(cls, path) -> "ModelBundle":
        generator, _ = load_generator(path)
        digest = hashlib.sha256(Path(path).read_bytes()).hexdigest()[:16]
        return cls(generator, digest)


def _png_base64(image: np.ndarray) -> str:
    arr = np.round(np.asarray(image) * 255.0).astype(np.uint8)
    buf = io.BytesIO()
    Image.fromarray(arr, mode="L").save(buf, format="PNG")
    return base64.b64encode(buf.getvalue()).decode("ascii")


def _bad_request(detail: str):
    return HTTPException(status_code=400, detail=detail)


def _resolve_style(body: dict) -> np.ndarray:
    has_style = body.get("style") is not None
    has_seed = body.get("seed") is not None
    if has_style == has_seed:
        raise _bad_request("exactly one of 'style' and 'seed' is required")
    if has_seed:
        rng = np.random.default_rng(int(body["seed"]))
        return rng.uniform(-1.0, 1.0, size=STYLE_DIM).astype(np.float32)
    style = np.asarray(body["style"], dtype=np.float32)
    if style.shape != (STYLE_DIM,):
        raise _bad_request(f"style must have exactly {STYLE_DIM} entries")
    if np.abs(style).max() > 1.0:
        raise _bad_request("style entries must lie in [-1, 1]")
    return style


def create_app(bundle: ModelBundle | None = None) -> FastAPI:
    app = FastAPI(title="glyphforge inference service")
    app.add_middleware(
        CORSMiddleware, allow_origins=["*"], allow_methods=["*"],
        allow_headers=["*"])
    app.state.bundle = bundle

    def require_model() -> ModelBundle:
        if app.state.bundle is None:
            raise HTTPException(
                status_code=503,
                detail={"error": "no_model", "message": "no checkpoint loaded"})
        return app.state.bundle

    @app.get("/model/info")
    def model_info():
        b = require_model()
        g = b.generator
        return {
            "image_size": g.image_size,
            "num_classes": g.num_classes,
            "class_labels": [chr(ord("A") + i) for i in range(g.num_classes)],
            "checkpoint_id": b.checkpoint_id,
            "style_dim": STYLE_DIM,
        }

    @app.post("/generate")
    def generate(body: dict):
        b = require_model()
        g = b.generator
        style = _resolve_style(body)
        classes = body.get("classes")
        if classes is None:
            classes = list(range(g.num_classes))
        if not classes:
            raise _bad_request("classes must be non-empty")
        for c in classes:
            if not (isinstance(c, int) and 0 <= c < g.num_classes):
                raise _bad_request(f"class id {c} out of range "
                                   f"[0, {g.num_classes})")
        images = {}
        for c in classes:
            z = assemble_latent_batch(style[None, :], c, g.num_classes)
            images[str(c)] = _png_base64(g.generate(z)[0])
        return {"style": [float(v) for v in style], "images": images}

    @app.post("/interpolate")
    def interpolate(body: dict):
        b = require_model()
        g = b.generator
        anchors = body.get("anchors")
        steps = body.get("steps")
        class_id = body.get("class_id", 0)
        if not isinstance(anchors, list) or len(anchors) < 2:
            raise _bad_request("need at least 2 anchor styles")
        try:
            anchor_arr = np.asarray(anchors, dtype=np.float32)
        except ValueError:
            raise _bad_request("anchors must be numeric vectors")
        if anchor_arr.ndim != 2 or anchor_arr.shape[1] != STYLE_DIM:
            raise _bad_request(f"each anchor must have {STYLE_DIM} entries")
        if not isinstance(steps, int) or steps < 1:
            raise _bad_request("steps must be a positive integer")
        if not (isinstance(class_id, int) and 0 <= class_id < g.num_classes):
            raise _bad_request(f"class id {class_id} out of range "
                               f"[0, {g.num_classes})")
        frames = interpolate_styles(g, anchor_arr, steps, class_id)
        return {
            "class_id": class_id,
            "frames": [_png_base64(frame) for frame in frames],
        }

    return app


def run_server(checkpoint_path, host: str = "127.0.0.1",
               port: int = 8000) -> None:
    import uvicorn
    app = create_app(ModelBundle.from_checkpoint(checkpoint_path))
    uvicorn.run(app, host=host, port=port)
