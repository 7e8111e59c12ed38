import numpy as np
import pytest
from hypothesis import settings

settings.register_profile("default", deadline=None, max_examples=30, derandomize=True)
settings.load_profile("default")


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


def interior_supported(values: np.ndarray, margin: int = 2) -> np.ndarray:
    """Zero out every node within ``margin`` of the boundary."""
    out = np.zeros_like(values)
    idx = tuple(slice(margin, -margin) for _ in range(values.ndim))
    out[idx] = values[idx]
    return out
