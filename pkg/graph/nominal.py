"""
Nominal and functional graphs, incidence matrices.

Edges are directed pairs (i, j) meaning "agent i observes agent j". A nominal graph is
undirected, i.e. closed under reversal, and its edges are kept in canonical
lexicographic order so that the columns of B group per source agent.
"""
from dataclasses import dataclass, field
from functools import cached_property
from typing import Dict, Iterable, List, Sequence, Tuple

import numpy as np

from util.errors import ConfigurationError

Edge = Tuple[int, int]


@dataclass(frozen=True)
class NominalGraph:
    """Undirected sensing graph stored as bidirectional pairs (0-based ids)"""

    n_nodes: int
    directed_edges: Tuple[Edge, ...]

    def __post_init__(self):
        problems = []
        if self.n_nodes < 1:
            problems.append(f"n_nodes must be positive, got {self.n_nodes}")
        edges = tuple((int(i), int(j)) for i, j in self.directed_edges)
        object.__setattr__(self, 'directed_edges', edges)
        seen = set()
        for i, j in edges:
            if i == j:
                problems.append(f"self-loop on node {i + 1}")
            if not (0 <= i < self.n_nodes and 0 <= j < self.n_nodes):
                problems.append(f"edge ({i + 1}, {j + 1}) references a node outside 1..{self.n_nodes}")
            if (i, j) in seen:
                problems.append(f"duplicate edge ({i + 1}, {j + 1})")
            seen.add((i, j))
        for i, j in edges:
            if (j, i) not in seen:
                problems.append(f"edge ({i + 1}, {j + 1}) has no reverse edge")
        if list(edges) != sorted(edges):
            problems.append("edges are not in canonical (source, destination) order")
        if problems:
            raise ConfigurationError("; ".join(problems))

    @classmethod
    def from_undirected(cls, n_nodes: int, pairs: Iterable[Sequence[int]]) -> "NominalGraph":
        """Build the bidirectional edge list from 0-based undirected pairs"""
        directed = set()
        for i, j in pairs:
            directed.add((int(i), int(j)))
            directed.add((int(j), int(i)))
        return cls(n_nodes, tuple(sorted(directed)))

    @property
    def n_edges(self) -> int:
        return len(self.directed_edges)

    @cached_property
    def sources(self) -> np.ndarray:
        return np.array([i for i, _ in self.directed_edges], dtype=int)

    @cached_property
    def targets(self) -> np.ndarray:
        return np.array([j for _, j in self.directed_edges], dtype=int)

    @cached_property
    def edge_index(self) -> Dict[Edge, int]:
        return {edge: m for m, edge in enumerate(self.directed_edges)}

    @cached_property
    def reverse_index(self) -> np.ndarray:
        """Column of (j, i) for every column (i, j)"""
        return np.array([self.edge_index[(j, i)] for i, j in self.directed_edges], dtype=int)

    @cached_property
    def out_slices(self) -> Tuple[slice, ...]:
        """Contiguous column range of each agent's outgoing edges"""
        counts = np.bincount(self.sources, minlength=self.n_nodes)
        offsets = np.concatenate(([0], np.cumsum(counts)))
        return tuple(slice(int(offsets[i]), int(offsets[i + 1])) for i in range(self.n_nodes))

    @cached_property
    def degrees(self) -> np.ndarray:
        return np.bincount(self.sources, minlength=self.n_nodes)

    @property
    def max_degree(self) -> int:
        return int(self.degrees.max()) if self.n_edges else 0

    @cached_property
    def undirected_edges(self) -> Tuple[Edge, ...]:
        return tuple((i, j) for i, j in self.directed_edges if i < j)

    def neighbors(self, i: int) -> Tuple[int, ...]:
        return tuple(int(j) for j in self.targets[self.out_slices[i]])

    def as_dict(self) -> dict:
        """1-based undirected edge list, the scenario-file form"""
        return {
            'n_nodes': self.n_nodes,
            'edges': [[i + 1, j + 1] for i, j in self.undirected_edges],
        }


@dataclass(frozen=True, eq=False)
class FunctionalGraph:
    """Edges and nodes actually available at one step"""

    graph: NominalGraph
    step: int
    active_nodes: np.ndarray
    edge_mask: np.ndarray
    counts: np.ndarray = field(init=False)

    def __post_init__(self):
        nodes = np.asarray(self.active_nodes, dtype=bool).copy()
        mask = np.asarray(self.edge_mask, dtype=bool).copy()
        if nodes.shape != (self.graph.n_nodes,) or mask.shape != (self.graph.n_edges,):
            raise ConfigurationError(
                f"functional graph masks have shapes {nodes.shape}, {mask.shape}; "
                f"expected ({self.graph.n_nodes},), ({self.graph.n_edges},)"
            )
        # an available edge needs both endpoints present
        mask &= nodes[self.graph.sources] & nodes[self.graph.targets]
        nodes.setflags(write=False)
        mask.setflags(write=False)
        counts = np.bincount(self.graph.sources[mask], minlength=self.graph.n_nodes)
        counts.setflags(write=False)
        object.__setattr__(self, 'active_nodes', nodes)
        object.__setattr__(self, 'edge_mask', mask)
        object.__setattr__(self, 'counts', counts)

    @classmethod
    def nominal(cls, graph: NominalGraph, step: int) -> "FunctionalGraph":
        return cls(graph, step, np.ones(graph.n_nodes, dtype=bool), np.ones(graph.n_edges, dtype=bool))

    @property
    def active_directed_edges(self) -> List[Edge]:
        return [edge for edge, on in zip(self.graph.directed_edges, self.edge_mask) if on]

    def available_neighbors(self, i: int) -> Tuple[int, ...]:
        sl = self.graph.out_slices[i]
        return tuple(int(j) for j, on in zip(self.graph.targets[sl], self.edge_mask[sl]) if on)

    def same_as(self, other: "FunctionalGraph") -> bool:
        return (
            self.graph == other.graph
            and np.array_equal(self.active_nodes, other.active_nodes)
            and np.array_equal(self.edge_mask, other.edge_mask)
        )


def incidence_blocks(g: NominalGraph) -> Tuple[List[np.ndarray], np.ndarray]:
    """Incidence matrix B (N x M) and its per-agent column blocks B_i

    Column m for edge (i, j) holds +1 at row i and -1 at row j.

    Args:
        g: Nominal graph

    Returns:
        tuple: (list of B_i with shape N x N_i, full B with shape N x M)
    """
    B = np.zeros((g.n_nodes, g.n_edges))
    columns = np.arange(g.n_edges)
    B[g.sources, columns] = 1.0
    B[g.targets, columns] = -1.0
    blocks = [B[:, sl] for sl in g.out_slices]
    return blocks, B


def functional_incidence(fg: FunctionalGraph, g: NominalGraph) -> List[np.ndarray]:
    """Per-agent blocks B_{i,k}: the columns of B_i whose edges are available at step k"""
    if fg.graph != g:
        raise ConfigurationError("functional graph was not realized from this nominal graph")
    blocks, _ = incidence_blocks(g)
    return [block[:, fg.edge_mask[sl]] for block, sl in zip(blocks, g.out_slices)]


def algebraic_connectivity(g: NominalGraph) -> float:
    """Second-smallest eigenvalue of the unweighted Laplacian of the undirected graph"""
    _, B = incidence_blocks(g)
    # each undirected edge appears twice in B
    laplacian = 0.5 * B @ B.T
    eigenvalues = np.linalg.eigvalsh(laplacian)
    return float(eigenvalues[1]) if g.n_nodes > 1 else 0.0
