"""Shared fixtures for the tableware test suite"""

import numpy as np
import pytest

from src.config import EncoderConfig
from src.encoder import MunicipalityRecord
from src.fixture import fixture_records, write_fixture
from src.geodata import Polyline2D
from src.mesher import TriangleMesh


def make_record(**overrides) -> MunicipalityRecord:
    values = dict(name="Testfalu", reedbed_length=2000.0, reedbed_cuts=4,
                  avg_cut_distance=300.0, coastline_length=5000.0,
                  artificial_shoreline=1000.0, builtup_fraction=0.1, slope=10.0,
                  shoreline=Polyline2D([(0, 0), (2000, 500), (4000, 0)]))
    values.update(overrides)
    return MunicipalityRecord(**values)


@pytest.fixture
def config():
    return EncoderConfig()


@pytest.fixture
def record():
    return make_record()


@pytest.fixture(scope="session")
def records():
    return fixture_records()


@pytest.fixture
def by_name(records):
    return {r.name: r for r in records}


@pytest.fixture(scope="session")
def fixture_dir(tmp_path_factory):
    directory = tmp_path_factory.mktemp("fixture")
    write_fixture(directory)
    return directory


@pytest.fixture
def tetrahedron():
    """Regular tetrahedron with unit edges, wound outward"""
    v = np.array([(1, 1, 1), (1, -1, -1), (-1, 1, -1), (-1, -1, 1)]) / (2 * np.sqrt(2))
    return TriangleMesh(v, [(0, 1, 2), (0, 3, 1), (0, 2, 3), (1, 3, 2)])


@pytest.fixture
def cube():
    """Unit cube, vertex index = x + 2y + 4z"""
    v = [(x, y, z) for z in (0, 1) for y in (0, 1) for x in (0, 1)]
    faces = [(0, 2, 3), (0, 3, 1), (4, 5, 7), (4, 7, 6), (0, 1, 5), (0, 5, 4),
             (2, 6, 7), (2, 7, 3), (0, 4, 6), (0, 6, 2), (1, 3, 7), (1, 7, 5)]
    return TriangleMesh(v, faces)
