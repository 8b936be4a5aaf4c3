import json
import math
import os

import pytest

from qgraph.config import settings
from qgraph.core import (
    SMatrixEvaluator,
    SpectralSolver,
    TraceFormula,
    canonicalize,
    factory,
    interval,
    loop,
    star,
    validate,
)

STAR_LENGTHS = [0.8, 1.0, 1.2]


class Setup:
    """Graph, boundary conditions and the solvers built on them."""

    def __init__(self, g, kind, params=None):
        self.graph = g
        self.bc = validate(factory(kind, g, params), g)
        self.canonical = canonicalize(self.bc)
        self.evaluator = SMatrixEvaluator(g, self.canonical)
        self.solver = SpectralSolver(self.evaluator)
        self.trace = TraceFormula(self.evaluator, self.solver)


@pytest.fixture(autouse=True)
def restore_settings():
    """Undo numerical overrides a test writes into the process settings."""
    saved = settings.numerics()
    yield
    for name, value in saved.items():
        setattr(settings, name, value)


@pytest.fixture
def build_setup():
    return Setup


@pytest.fixture
def neumann_interval():
    return Setup(interval(math.pi), "neumann")


@pytest.fixture
def dirichlet_interval():
    return Setup(interval(math.pi), "dirichlet")


@pytest.fixture
def kirchhoff_loop():
    return Setup(loop(1.0), "kirchhoff")


@pytest.fixture
def kirchhoff_star():
    return Setup(star(STAR_LENGTHS), "kirchhoff")


@pytest.fixture
def robin_interval():
    """Robin interval of length 4 with lambda = 1 at both ends."""
    return Setup(interval(4.0), "robin", {"lambda": 1.0})


@pytest.fixture
def graph_file(tmp_path):
    """Write a graph document and return its path."""

    def write(document, name="graph.json"):
        path = tmp_path / name
        path.write_text(json.dumps(document))
        return str(path)

    return write


@pytest.fixture
def interval_document():
    return {
        "vertices": 2,
        "edges": [{"from": 0, "to": 1, "length": math.pi}],
        "boundary": {"type": "neumann"},
    }


@pytest.fixture
def star_document():
    return {
        "vertices": 4,
        "edges": [{"from": 0, "to": e + 1, "length": length} for e, length in enumerate(STAR_LENGTHS)],
        "boundary": {"type": "kirchhoff"},
    }


@pytest.fixture
def out_dir(tmp_path):
    path = tmp_path / "out"
    os.makedirs(path)
    return path
