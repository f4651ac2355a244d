import pathlib

import numpy as np
import pytest

DATA_DIR = pathlib.Path(__file__).resolve().parent / "data"


@pytest.fixture
def data_dir() -> pathlib.Path:
    return DATA_DIR


def make_psd(rng: np.random.Generator, p: int, ridge: float = 0.5) -> np.ndarray:
    """Random well-conditioned PSD matrix."""
    a = rng.standard_normal((p, p))
    m = a @ a.T / p + ridge * np.eye(p)
    return 0.5 * (m + m.T)


@pytest.fixture
def rng() -> np.random.Generator:
    return np.random.default_rng(20240817)
