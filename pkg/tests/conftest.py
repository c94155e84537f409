"""
Shared fixtures: seeded generators, tiny configurations and small on-disk datasets
"""

import numpy as np
import pytest

from mapsam.config import RunConfig
from mapsam.data import build_dataset
from mapsam.model import MapSAM


def pytest_addoption(parser):
    parser.addoption("--runslow", action="store_true", default=False, help="run training-run experiments")


def pytest_configure(config):
    config.addinivalue_line("markers", "slow: training-run experiment, needs --runslow")


def pytest_collection_modifyitems(config, items):
    if config.getoption("--runslow"):
        return
    skip_slow = pytest.mark.skip(reason="needs --runslow")
    for item in items:
        if "slow" in item.keywords:
            item.add_marker(skip_slow)


TINY_OVERRIDES = {
    "encoder.image_size": 16,
    "encoder.patch_size": 4,
    "encoder.embed_dim": 32,
    "encoder.num_heads": 2,
    "encoder.num_layers": 2,
    "encoder.mlp_ratio": 2,
    "encoder.feature_tap_layers": "1,2",
}

SMALL_OVERRIDES = dict(TINY_OVERRIDES, **{
    "encoder.image_size": 32,
    "encoder.patch_size": 8,
    "training.batch_size": 2,
    "training.epochs": 2,
    "training.pretrain_epochs": 1,
    "schedule.warmup_iters": 2,
    "data.pretrain_count": 4,
})


@pytest.fixture
def rng():
    return np.random.default_rng(0)


@pytest.fixture
def tiny_config():
    """16×16 images, 4×4 feature grid, two encoder layers"""
    return RunConfig().with_overrides(TINY_OVERRIDES)


@pytest.fixture
def small_config():
    """32×32 images (the smallest generator tile) with a fast schedule"""
    return RunConfig().with_overrides(SMALL_OVERRIDES)


@pytest.fixture
def tiny_model(tiny_config):
    return MapSAM(tiny_config, np.random.default_rng(7))


@pytest.fixture
def small_dataset(tmp_path):
    """Railway tiles of side 32: 6 train, 2 val, 2 test"""
    return build_dataset("railway", (6, 2, 2), root_seed=3, root=str(tmp_path / "railway"), size=32)
