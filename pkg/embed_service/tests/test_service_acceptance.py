"""Acceptance gate for the embedding service; run with -s to see the line."""

import functools

import numpy as np

from embed_service import MAX_BATCH

from _images import random_png


def criterion(num, label):
    def deco(fn):
        @functools.wraps(fn)
        def wrapper(*args, **kwargs):
            try:
                fn(*args, **kwargs)
            except BaseException:
                print(f"FAIL  criterion {num}: {label}", flush=True)
                raise
            print(f"PASS  criterion {num}: {label}", flush=True)
        return wrapper
    return deco


@criterion("S1", "a 64-PNG batch returns 64 unit-norm 768-d vectors in "
                 "order, duplicates match, and 65 images get 413")
def test_embed_service_contract(client):
    images = [random_png(seed) for seed in range(MAX_BATCH)]
    body = client.post("/embed", json={"images": images}).json()
    vectors = np.asarray(body["vectors"])
    assert body["dim"] == 768
    assert vectors.shape == (MAX_BATCH, 768)
    assert np.abs(np.linalg.norm(vectors, axis=1) - 1.0).max() <= 1e-4

    # order: the reversed batch embeds to the reversed vectors, and
    # distinct inputs do not collide
    rev = client.post("/embed", json={"images": images[::-1]}).json()
    assert np.allclose(np.asarray(rev["vectors"])[::-1], vectors, atol=1e-5)
    assert not np.allclose(vectors[0], vectors[1], atol=1e-3)

    # duplicates inside one batch come back identical
    dup = client.post("/embed",
                      json={"images": [images[0], images[1], images[0]]})
    pair = dup.json()["vectors"]
    assert pair[0] == pair[2]

    oversize = client.post("/embed",
                           json={"images": images + [images[0]]})
    assert oversize.status_code == 413
