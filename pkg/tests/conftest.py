import numpy as np
import pytest

from softpd.geometry import SiteSet, dataset_from_clusters


@pytest.fixture
def five_point():
    """1-D instance with clusters {0, 1, 6} and {4, 5} and sites at 0 and 5."""
    data = dataset_from_clusters([[[0.0], [1.0], [6.0]], [[4.0], [5.0]]])
    return data, SiteSet([[0.0], [5.0]])


@pytest.fixture
def symmetric_pair():
    data = dataset_from_clusters([[[-1.0]], [[1.0]]])
    return data, SiteSet([[-1.0], [1.0]])


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
