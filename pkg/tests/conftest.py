import networkx as nx
import pytest

from kt1danner.graph import Graph


def to_nx(g: Graph) -> nx.MultiGraph | nx.Graph:
    out = nx.Graph()
    out.add_nodes_from(g.nodes)
    for (u, v), (w, mult) in g.edge_items():
        out.add_edge(u, v, weight=w, mult=mult)
    return out


@pytest.fixture
def nxg():
    return to_nx


ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
