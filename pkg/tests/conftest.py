import sys
from pathlib import Path

import numpy as np
import pytest
from hypothesis import strategies as st

sys.path.insert(0, str(Path(__file__).parent))

from genmat import build_tree  # noqa: E402
from genmat.datagen import random_tree  # noqa: E402


@st.composite
def parent_arrays(draw, min_n=1, max_n=40):
    """Parent arrays (root -1) with each node attached to an earlier one, then shuffled."""
    n = draw(st.integers(min_n, max_n))
    parent = [-1] + [draw(st.integers(0, i - 1)) for i in range(1, n)]
    perm = draw(st.permutations(range(n)))
    shuffled = [-1] * n
    for i, p in enumerate(parent):
        shuffled[perm[i]] = -1 if p < 0 else perm[p]
    return shuffled


def trees(min_n=1, max_n=40):
    from genmat import HierarchicalTree

    return parent_arrays(min_n, max_n).map(HierarchicalTree.from_parent_array)


def tree_corpus(count, max_n, seed, min_n=2):
    """Mixed corpus: uniform recursive trees and bounded fan-out trees."""
    rng = np.random.default_rng(seed)
    out = []
    for k in range(count):
        n = int(rng.integers(min_n, max_n + 1))
        fan = None if k % 2 == 0 else int(rng.integers(2, 6))
        out.append(random_tree(n, rng, max_children=fan))
    return out


@pytest.fixture
def five():
    return build_tree({"A": None, "B": "A", "C": "A", "D": "B", "E": "B"})


@pytest.fixture
def chain3():
    return build_tree({1: None, 2: 1, 3: 2})


@pytest.fixture
def star():
    return build_tree({"r": None, "a": "r", "b": "r"})


ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
