"""Synchronous CONGEST simulation under KT1 knowledge.

Builds additive danners and runs MST, connected components, approximate
min-cut and verification algorithms on top of them, with every message
metered in O(log n)-bit blocks.
"""

from .graph import EdgeId, Graph, generate, read_graph, write_graph
from .congest import Metrics, Simulation, meter_payload, run

__all__ = [
    "EdgeId",
    "Graph",
    "Metrics",
    "Simulation",
    "generate",
    "meter_payload",
    "read_graph",
    "run",
    "write_graph",
]
__version__ = "0.1.0"
