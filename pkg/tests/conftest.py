import sys
from pathlib import Path

import numpy as np
import pytest
from hypothesis import settings

sys.path.insert(0, str(Path(__file__).parent))

from aams.weights import random_bundle  # noqa: E402

# fixed example sequence so every run exercises the same cases
settings.register_profile("repro", derandomize=True)
settings.load_profile("repro")


@pytest.fixture
def rng():
    return np.random.default_rng(20240607)


@pytest.fixture(scope="session")
def bundle():
    return random_bundle(seed=7)


@pytest.fixture(scope="session")
def small_images():
    r = np.random.default_rng(3)
    content = r.random((3, 64, 64), dtype=np.float32)
    style = r.random((3, 64, 64), dtype=np.float32)
    return content, style
