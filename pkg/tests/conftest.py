import warnings
from pathlib import Path

import numpy as np
import pytest

from ciliagraph import GraphDataset, GraphInstance
from ciliagraph.encoder import BelowMinimumDimensionWarning

ACCEPTANCE_LINES: list[str] = []


def pytest_addoption(parser):
    parser.addoption(
        "--tudataset-dir",
        default=str(Path(__file__).resolve().parent.parent / "data"),
        help="directory holding the public TUDataset folders (Letter-low, PROTEINS_full, Synthie, COIL-RAG)",
    )


def pytest_configure(config):
    warnings.filterwarnings("ignore", category=BelowMinimumDimensionWarning)


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


@pytest.fixture
def record_criterion():
    def _record(name: str, status: str, detail: str = ""):
        line = f"{status:<9} {name}" + (f"  ({detail})" if detail else "")
        ACCEPTANCE_LINES.append(line)
        print(line)

    return _record


@pytest.fixture(scope="session")
def tudataset_dir(request) -> Path:
    return Path(request.config.getoption("--tudataset-dir"))


@pytest.fixture
def triangle():
    return GraphInstance.from_edge_list(np.zeros((3, 1)), [(0, 1), (1, 2), (0, 2)], 0)


@pytest.fixture
def path3():
    return GraphInstance.from_edge_list(np.zeros((3, 1)), [(0, 1), (1, 2)], 0)


def random_graph(rng: np.random.Generator, max_nodes: int = 6, n_attrs: int = 2, label: int = 0) -> GraphInstance:
    nodes = int(rng.integers(1, max_nodes + 1))
    pairs = [(u, v) for u in range(nodes) for v in range(u + 1, nodes)]
    keep = [p for p in pairs if rng.random() < 0.5]
    attrs = rng.normal(size=(nodes, n_attrs))
    return GraphInstance.from_edge_list(attrs, keep, label)


def random_dataset(rng: np.random.Generator, graphs: int = 30, classes: int = 3, n_attrs: int = 2, max_nodes: int = 6) -> GraphDataset:
    out = []
    for i in range(graphs):
        g = random_graph(rng, max_nodes, n_attrs, label=i % classes)
        # class-dependent shift so prototypes differ
        out.append(GraphInstance(g.node_attrs + g.label, g.edges, g.label))
    return GraphDataset.from_graphs(out, name="random", class_count=classes)
