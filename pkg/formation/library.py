"""
Shipped example frameworks.

Positions are generic (no three points collinear) and every framework except the
deliberately cut one carries a PSD stress of rank N - D - 1. The first D + 1 nodes are
the leaders.
"""
from dataclasses import dataclass
from typing import Dict, Tuple

import numpy as np

from formation.transforms import as_configuration
from graph.nominal import NominalGraph
from util.errors import ConfigurationError


@dataclass(frozen=True, eq=False)
class Framework:
    name: str
    graph: NominalGraph
    nominal: np.ndarray
    leaders: Tuple[int, ...]
    description: str = ''

    @property
    def dim(self) -> int:
        return self.nominal.shape[0]

    @property
    def followers(self) -> Tuple[int, ...]:
        return tuple(i for i in range(self.graph.n_nodes) if i not in self.leaders)


def _build(name, positions, edges, description) -> Framework:
    """positions and edges are 1-based, as in scenario files"""
    P = as_configuration(np.array(positions, dtype=float).T)
    graph = NominalGraph.from_undirected(P.shape[1], [(i - 1, j - 1) for i, j in edges])
    P.setflags(write=False)
    return Framework(name, graph, P, tuple(range(P.shape[0] + 1)), description)


# Hub-and-spoke: leaders 1..3 on the outside, hub 4, one follower between each pair
_GRAPH1_POSITIONS = [
    (3.0, 0.0), (0.0, 3.0), (-3.0, -3.0),
    (0.0, 0.0), (2.5, 0.25), (-0.25, 2.25), (-2.25, -2.5),
]
_GRAPH1_EDGES = [
    (1, 4), (1, 5), (1, 6),
    (2, 4), (2, 6), (2, 7),
    (3, 4), (3, 5), (3, 7),
    (4, 5), (4, 6), (4, 7),
]

# Ten points on a circle of radius 2.5: a leader triangle observed by every follower,
# plus two follower triangles
_GRAPH2_POSITIONS = [
    (2.0, 1.5), (-2.0, 1.5), (0.0, -2.5),
    (2.5, 0.0), (1.5, 2.0), (0.0, 2.5), (-1.5, 2.0), (-2.5, 0.0), (-1.5, -2.0), (1.5, -2.0),
]
_GRAPH2_EDGES = (
    [(1, 2), (1, 3), (2, 3)]
    + [(leader, follower) for follower in range(4, 11) for leader in (1, 2, 3)]
    + [(4, 5), (4, 6), (5, 6), (7, 8), (7, 9), (8, 9)]
)

_FRAMEWORKS: Dict[str, Framework] = {
    'graph1': _build('graph1', _GRAPH1_POSITIONS, _GRAPH1_EDGES,
                     '7 agents, 12 edges, leaders 1-3'),
    'graph2': _build('graph2', _GRAPH2_POSITIONS, _GRAPH2_EDGES,
                     '10 agents, 30 edges, leaders 1-3'),
    'graph1-cut': _build('graph1-cut', _GRAPH1_POSITIONS, [e for e in _GRAPH1_EDGES if e != (3, 5)],
                         'graph1 without edge (3, 5); agent 5 keeps two neighbours and is not rigidly held'),
}


def available_frameworks() -> Tuple[str, ...]:
    return tuple(_FRAMEWORKS)


def get_framework(name: str) -> Framework:
    try:
        return _FRAMEWORKS[name]
    except KeyError:
        raise ConfigurationError(
            f"unknown framework '{name}'. Available: {', '.join(available_frameworks())}"
        ) from None
