import math
import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

from cornerbox.geometry import Box3D, BoxBEV


def random_bev(rng: np.random.Generator, *, span: float = 20.0) -> BoxBEV:
    return BoxBEV(
        x=rng.uniform(-span, span),
        y=rng.uniform(-span, span),
        l=rng.uniform(0.5, 8.0),
        w=rng.uniform(0.3, 6.0),
        theta=rng.uniform(-math.pi, math.pi),
    )


def random_box3d(rng: np.random.Generator, *, span: float = 20.0) -> Box3D:
    h = rng.uniform(0.5, 4.0)
    z_bottom = rng.uniform(-2.0, 2.0)
    return Box3D.from_bev(random_bev(rng, span=span), z=z_bottom + h / 2.0, h=h)


@pytest.fixture
def rng() -> np.random.Generator:
    return np.random.default_rng(20240817)


@pytest.fixture(scope="session")
def small_dataset(tmp_path_factory):
    """Three varied-dims frames on disk, shared across tests that only read."""
    from cornerbox.synthetic import generate_dataset

    root = tmp_path_factory.mktemp("dataset")
    manifest = generate_dataset(root, frames=3, seed=5)
    return root, manifest
