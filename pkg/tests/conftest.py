import pytest

from spillscope.core import ProbeConfig


@pytest.fixture
def default_config() -> ProbeConfig:
    return ProbeConfig()
