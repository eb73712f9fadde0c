import numpy as np
import pytest
import torch

from netsimpgan.core import Graph

torch.set_num_threads(1)


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


@pytest.fixture
def path4():
    return Graph(4, frozenset({(0, 1), (1, 2), (2, 3)}))


@pytest.fixture
def grid9():
    edges = set()
    for r in range(3):
        for c in range(3):
            k = 3 * r + c
            if c < 2:
                edges.add((k, k + 1))
            if r < 2:
                edges.add((k, k + 3))
    return Graph(9, frozenset(edges))


def pytest_terminal_summary(terminalreporter):
    from helpers import ACCEPTANCE_LINES

    if ACCEPTANCE_LINES:
        terminalreporter.write_sep("=", "acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(line)
