import os
from pathlib import Path

import numpy as np
import pytest

try:
    from hypothesis import settings

    settings.register_profile("dke", deadline=None, max_examples=60,
                              derandomize=True)
    settings.load_profile("dke")
except ImportError:
    pass

SEED = int(os.environ.get("DKE_SEED", "20260823"))


@pytest.fixture
def rng():
    """Deterministic generator; override the seed with DKE_SEED."""
    return np.random.default_rng(SEED)


@pytest.fixture(scope="session")
def presets_dir():
    return Path(__file__).resolve().parent.parent / "presets"
