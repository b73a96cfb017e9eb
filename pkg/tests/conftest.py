import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from meanreflect import TimeGrid, VolatilityBand, build_lattice


@pytest.fixture(scope="session")
def band():
    return VolatilityBand(1.0, 4.0)


@pytest.fixture(scope="session")
def grid8():
    return TimeGrid(1.0, 8)


@pytest.fixture(scope="session")
def lattice8(band, grid8):
    return build_lattice(band, grid8)


@pytest.fixture(scope="session")
def grid6():
    return TimeGrid(1.0, 6)


@pytest.fixture(scope="session")
def lattice6(band, grid6):
    return build_lattice(band, grid6)


@pytest.fixture(scope="session")
def lattice4(band):
    return build_lattice(band, TimeGrid(1.0, 4))
