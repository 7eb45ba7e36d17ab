import math
import os

import numpy as np
import pytest

from action_map.boundary import GridSpec
from action_map.table import BoundaryTable, build_table
from track.canonical import circle_track, oval_short, straight_track
from vehicle.params import VehicleParams

# steady cornering state of the friction-classification example
EXAMPLE_SPEED = 15.4
EXAMPLE_DELTA = math.radians(7.9)

# small grid: n_theta is a multiple of 8 so the unit-square corners are nodes
SMALL_COUNTS = (9, 11, 24)


@pytest.fixture(scope="session")
def params():
    return VehicleParams()


@pytest.fixture(scope="session")
def oval():
    return oval_short()


@pytest.fixture(scope="session")
def straight():
    return straight_track()


@pytest.fixture(scope="session")
def circle():
    return circle_track(radius=30.0, spacing=0.25)


@pytest.fixture(scope="session")
def small_table(params):
    table, _ = build_table(params, GridSpec.for_vehicle(params, SMALL_COUNTS), progress=False)
    return table


@pytest.fixture(scope="session")
def desk_table(params):
    table, _ = build_table(params, GridSpec.for_vehicle(params), workers=min(4, os.cpu_count() or 1),
                           progress=False)
    return table


def synthetic_table(counts=(4, 5, 16), low=0.1, high=0.9, seed=0):
    """Table with random values strictly below the unit-square cap."""
    params = VehicleParams()
    grid = GridSpec.for_vehicle(params, counts)
    rho = np.random.default_rng(seed).uniform(low, high, size=grid.counts)
    return BoundaryTable(grid=grid, rho=rho, mu_max=params.mu_max, params_hash=params.hash())


@pytest.fixture
def clean_env():
    """Remove RACEAM_* variables before and after a test that loads dotenv files."""
    def scrub():
        for key in [k for k in os.environ if k.startswith("RACEAM_")]:
            del os.environ[key]
    scrub()
    yield
    scrub()
