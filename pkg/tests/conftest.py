import warnings

import numpy as np
import pytest

from packetscatter.barrier import BarrierProfile
from packetscatter.config import HOLE_BINS
from packetscatter.packet import PacketSpec


@pytest.fixture(scope="session")
def hole():
    return BarrierProfile(HOLE_BINS)


@pytest.fixture(scope="session")
def empty():
    return BarrierProfile(())


@pytest.fixture(scope="session")
def fig_spec():
    # kbar < 3 dk on purpose; the truncation warning is expected here
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", RuntimeWarning)
        return PacketSpec(1.0, 0.4, -15.0)


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)
