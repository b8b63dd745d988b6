"""Run the service with uvicorn, configured from the environment.

PORT (default 8400), MODEL_ID (default CLIP ViT-L/14, or ``tiny-random``
for an offline stand-in), DEVICE (default cpu). A model that fails to
load leaves the service answering 503 rather than crashing, so a probe
can distinguish a missing model from a dead process.
"""

import os
import sys

import uvicorn

from .app import create_app
from .model import DEFAULT_MODEL_ID, load_bundle


def main() -> None:
    port = int(os.environ.get("PORT", "8400"))
    model_id = os.environ.get("MODEL_ID", DEFAULT_MODEL_ID)
    device = os.environ.get("DEVICE", "cpu")
    try:
        bundle = load_bundle(model_id, device=device)
    except Exception as exc:
        print(f"embed-service: failed to load {model_id!r}: {exc}",
              file=sys.stderr)
        bundle = None
    uvicorn.run(create_app(bundle), host="0.0.0.0", port=port)


if __name__ == "__main__":
    main()
