import pytest
from fastapi.testclient import TestClient

from embed_service import TINY_MODEL_ID, create_app, load_bundle


@pytest.fixture(scope="session")
def bundle():
    return load_bundle(TINY_MODEL_ID)


@pytest.fixture(scope="session")
def client(bundle):
    return TestClient(create_app(bundle))
