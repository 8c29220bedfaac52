import numpy as np
import pytest

from cusplab import CuspGeometry, QuadratureConfig


@pytest.fixture
def geom_half():
    # alpha = 1/2 with room for gap heights up to ~0.134
    return CuspGeometry(alpha=0.5, r0=4.0 / 9.0, d0=0.43)


@pytest.fixture
def geom_rough():
    # alpha = 0.2 admits h up to ~0.066 only
    return CuspGeometry(alpha=0.2, r0=0.4, d0=0.399)


@pytest.fixture
def geom_smooth():
    return CuspGeometry(alpha=0.6, r0=0.457, d0=0.45)


@pytest.fixture
def qcfg():
    return QuadratureConfig(rel_tol=1e-8)


@pytest.fixture
def qcfg_fast():
    return QuadratureConfig(rel_tol=1e-6)


@pytest.fixture
def rng():
    return np.random.default_rng(20260810)
