import numpy as np
import pytest

from viscohalf import Material, frequency_context


def rel(a, b):
    """Relative Frobenius distance of ``a`` from reference ``b``."""
    a, b = np.asarray(a), np.asarray(b)
    return float(np.linalg.norm(a - b) / np.linalg.norm(b))


@pytest.fixture
def zener_material():
    return Material(lam=2.0, mu=1.0, rho=1.0, p=0.0, q=0.3, alpha=0.8)


@pytest.fixture
def zener_ctx(zener_material):
    return frequency_context(zener_material, 1.0)


@pytest.fixture
def rng():
    return np.random.default_rng(20261015)
