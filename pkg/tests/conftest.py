from pathlib import Path

import numpy as np
import pytest

DATA = Path(__file__).parent / "data"


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture
def data_dir():
    return DATA


def random_psd(rng, dim=4, scale=1.0):
    A = rng.standard_normal((dim, dim)) * scale
    return A @ A.T + 1e-3 * np.eye(dim)
