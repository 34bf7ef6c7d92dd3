# conftest.py
"""
Shared fixtures for the fk-separation test suite.

Slow tests (long chains, full sweeps) are marked @pytest.mark.slow:
    pytest -m "not slow"
"""

import pytest

from operators.lattice import Region, SiteRegion, build_rectangle
from operators.models import FkParams


@pytest.fixture
def square() -> Region:
    """The four bonds of the unit square."""
    return build_rectangle((0, 0), (1, 1))


@pytest.fixture
def strip() -> Region:
    """A straight path of five bonds, (0,0) to (5,0)."""
    return build_rectangle((0, 0), (5, 0))


@pytest.fixture
def two_bonds() -> Region:
    return Region([((0, 0), (1, 0)), ((1, 0), (2, 0))])


@pytest.fixture
def pair_sites() -> SiteRegion:
    return SiteRegion([(0, 0), (1, 0)])


@pytest.fixture
def half_q2() -> FkParams:
    return FkParams(p=0.5, q=2)


@pytest.fixture
def out_dir(tmp_path):
    """Output root for CLI runs."""
    path = tmp_path / "out"
    path.mkdir()
    return str(path)
