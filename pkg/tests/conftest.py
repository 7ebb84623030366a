import bhtsne  # noqa: F401  (sets the numba thread env before numba loads)
import numpy as np
import pytest


@pytest.fixture(scope="session")
def digits():
    """The 1797x64 handwritten digit dataset (no network needed)."""
    from sklearn.datasets import load_digits
    d = load_digits()
    return d.data.astype(np.float64), d.target.astype(np.int64)


@pytest.fixture
def rng():
    return np.random.default_rng(1234)
