import math
from pathlib import Path

import pytest

from ctmaas.geo import EARTH_RADIUS_M, GeoPoint
from ctmaas.network import load_graph

REPO = Path(__file__).resolve().parent.parent
FIXTURES = REPO / "fixtures"

# degrees per meter along a meridian (and the equator)
DEG_PER_M = 180.0 / (math.pi * EARTH_RADIUS_M)


def equator_point(east_m: float, north_m: float = 0.0) -> GeoPoint:
    """A point east/north of (0, 0) by the given meters, exact at the equator."""
    return GeoPoint(north_m * DEG_PER_M, east_m * DEG_PER_M)


@pytest.fixture(scope="session")
def hexnet_text() -> str:
    return (FIXTURES / "fixture-hexnet.json").read_text(encoding="utf-8")


@pytest.fixture()
def hexnet(hexnet_text):
    return load_graph(hexnet_text)


@pytest.fixture(scope="session")
def fixtures_dir() -> Path:
    return FIXTURES
