"""Remote embedder client against a local in-process HTTP service."""

import base64
import io
import json
import threading
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer

import numpy as np
import pytest
from PIL import Image

from spillscope.embed import EmbedServiceError, ReferenceEmbedder, RemoteEmbedder, reference_embed


class _StubService:
    """Configurable /embed endpoint recording the batches it receives."""

    def __init__(self):
        self.batch_sizes = []
        self.mode = "ok"  # ok | http_error | short_reply | flaky_dim
        self.requests_seen = 0
        handler = self._make_handler()
        self.server = ThreadingHTTPServer(("127.0.0.1", 0), handler)
        self.thread = threading.Thread(target=self.server.serve_forever,
                                       daemon=True)
        self.thread.start()

    @property
    def url(self) -> str:
        host, port = self.server.server_address
        return f"http://{host}:{port}"

    def close(self):
        self.server.shutdown()
        self.server.server_close()

    def _make_handler(service):
        class Handler(BaseHTTPRequestHandler):
            def log_message(self, *args):
                pass

            def do_POST(self):
                if self.path != "/embed":
                    self.send_error(404)
                    return
                if service.mode == "http_error":
                    self.send_error(500, "boom")
                    return
                body = json.loads(self.rfile.read(
                    int(self.headers["Content-Length"])))
                images = body["images"]
                service.batch_sizes.append(len(images))
                service.requests_seen += 1
                vectors = []
                for b64 in images:
                    with Image.open(io.BytesIO(base64.b64decode(b64))) as im:
                        arr = np.asarray(im.convert("RGB"), dtype=np.uint8)
                    vectors.append(reference_embed(arr).tolist())
                if service.mode == "short_reply" and vectors:
                    vectors = vectors[:-1]
                dim = 24
                if service.mode == "flaky_dim" and service.requests_seen > 1:
                    dim = 23
                    vectors = [v[:23] for v in vectors]
                payload = json.dumps({"dim": dim, "vectors": vectors}).encode()
                self.send_response(200)
                self.send_header("Content-Type", "application/json")
                self.send_header("Content-Length", str(len(payload)))
                self.end_headers()
                self.wfile.write(payload)

        return Handler


@pytest.fixture
def service():
    svc = _StubService()
    yield svc
    svc.close()


def _crops(n, seed=0):
    rng = np.random.default_rng(seed)
    return [rng.integers(0, 256, (6, 5, 3), dtype=np.uint8) for _ in range(n)]


def test_round_trip_matches_local_embeddings(service):
    crops = _crops(5)
    remote = RemoteEmbedder(service.url, batch=64)
    out = remote.embed(crops)
    assert out.shape == (5, 24)
    assert remote.dim == 24
    assert np.allclose(out, ReferenceEmbedder().embed(crops), atol=1e-12)


def test_chunks_requests_by_batch_size(service):
    remote = RemoteEmbedder(service.url, batch=3)
    out = remote.embed(_crops(8))
    assert out.shape == (8, 24)
    assert service.batch_sizes == [3, 3, 2]


def test_preserves_input_order_across_chunks(service):
    crops = _crops(7, seed=1)
    chunked = RemoteEmbedder(service.url, batch=2).embed(crops)
    single = RemoteEmbedder(service.url, batch=64).embed(crops)
    assert np.array_equal(chunked, single)


def test_http_error_raises(service):
    service.mode = "http_error"
    with pytest.raises(EmbedServiceError, match="500"):
        RemoteEmbedder(service.url).embed(_crops(2))


def test_wrong_vector_count_raises(service):
    service.mode = "short_reply"
    with pytest.raises(EmbedServiceError, match="shape"):
        RemoteEmbedder(service.url).embed(_crops(3))


def test_dim_change_between_chunks_raises(service):
    service.mode = "flaky_dim"
    with pytest.raises(EmbedServiceError, match="dim changed"):
        RemoteEmbedder(service.url, batch=2).embed(_crops(4))


def test_unreachable_host_raises():
    remote = RemoteEmbedder("http://127.0.0.1:9", timeout=0.5)
    with pytest.raises(EmbedServiceError, match="request failed"):
        remote.embed(_crops(1))


def test_empty_input_makes_no_requests(service):
    remote = RemoteEmbedder(service.url)
    assert remote.embed([]).shape == (0, 0)
    assert service.requests_seen == 0
