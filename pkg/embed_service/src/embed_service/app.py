"""HTTP interface: POST /embed and GET /health.

The wire contract matches what the analysis client sends: a JSON body
``{"images": [<base64 PNG>, ...]}`` answered with ``{"dim": D,
"vectors": [[...], ...]}`` in request order. Input is PNG only so both
sides hash the same bytes; lossy recompression between client and
service would silently shift similarities.
"""

import base64
import io
from typing import Optional

from fastapi import FastAPI, HTTPException
from PIL import Image
from pydantic import BaseModel

from .model import ModelBundle, embed_images

MAX_BATCH = 64


class EmbedRequest(BaseModel):
    images: list[str]


def _decode_png(payload: str, index: int) -> Image.Image:
    try:
        raw = base64.b64decode(payload, validate=True)
        img = Image.open(io.BytesIO(raw))
        img.load()
    except Exception:
        raise HTTPException(status_code=400,
                            detail=f"image {index} is not a decodable image")
    if img.format != "PNG":
        raise HTTPException(
            status_code=400,
            detail=f"image {index} is not PNG (got {img.format})")
    return img.convert("RGB")


def create_app(bundle: Optional[ModelBundle]) -> FastAPI:
    """Build the service around an already loaded bundle.

    ``bundle=None`` stands for a service whose model failed to load; it
    stays up and answers 503 so orchestration can tell "down" from
    "not ready".
    """
    app = FastAPI(title="embed-service")
    app.state.bundle = bundle

    def _require_bundle() -> ModelBundle:
        if app.state.bundle is None:
            raise HTTPException(status_code=503, detail="model not loaded")
        return app.state.bundle

    @app.get("/health")
    def health() -> dict:
        loaded = _require_bundle()
        return {"model": loaded.model_id, "dim": loaded.dim,
                "preprocess": loaded.preprocess}

    @app.post("/embed")
    def embed(req: EmbedRequest) -> dict:
        loaded = _require_bundle()
        if not req.images:
            raise HTTPException(status_code=400, detail="empty batch")
        if len(req.images) > MAX_BATCH:
            raise HTTPException(
                status_code=413,
                detail=f"batch too large: {len(req.images)} > {MAX_BATCH}")
        images = [_decode_png(s, i) for i, s in enumerate(req.images)]
        vectors = embed_images(loaded, images)
        return {"dim": loaded.dim,
                "vectors": [[float(x) for x in row] for row in vectors]}

    return app
