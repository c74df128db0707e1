"""
Edge-availability models and the counter-based random streams behind them.

A loss model turns (nominal graph, step, run streams) into a FunctionalGraph. Models
compose by wrapping a `base` model: a schedule or a node departure is applied on top of
whatever the base model made available.
"""
from abc import ABC, abstractmethod
from bisect import bisect_right
from dataclasses import dataclass
from typing import Dict, Optional, Sequence, Tuple

import numpy as np

from config import ERROR_MESSAGES
from graph.nominal import Edge, FunctionalGraph, NominalGraph
from util.errors import ConfigurationError

STREAM_LOSSES = 0
STREAM_NOISE = 1
STREAM_INITIAL = 2


class RunStreams:
    """Counter-based random streams of one Monte Carlo run

    Every purpose gets its own Philox key derived from (root seed, run index, purpose).
    Draws for step k use k as part of the Philox counter, so they do not depend on how
    many numbers other steps or other consumers have drawn.
    """

    def __init__(self, root_seed: int, run_index: int = 0):
        self.root_seed = int(root_seed)
        self.run_index = int(run_index)
        self._keys: Dict[int, np.ndarray] = {}

    def _key(self, purpose: int) -> np.ndarray:
        if purpose not in self._keys:
            seq = np.random.SeedSequence(entropy=self.root_seed, spawn_key=(self.run_index, purpose))
            self._keys[purpose] = seq.generate_state(2, dtype=np.uint64)
        return self._keys[purpose]

    def generator(self, purpose: int, step: int = 0) -> np.random.Generator:
        counter = np.array([0, step, 0, 0], dtype=np.uint64)
        return np.random.Generator(np.random.Philox(key=self._key(purpose), counter=counter))

    def uniforms(self, purpose: int, step: int, size: int) -> np.ndarray:
        return self.generator(purpose, step).random(size)

    def normals(self, purpose: int, step: int, shape) -> np.ndarray:
        return self.generator(purpose, step).standard_normal(shape)


class LossModel(ABC):
    """Decides which nodes and directed edges are available at a step"""

    @abstractmethod
    def realize(self, graph: NominalGraph, step: int, streams: RunStreams) -> FunctionalGraph:
        ...

    @abstractmethod
    def as_dict(self) -> dict:
        ...

    def describe(self) -> str:
        return type(self).__name__


class NoLoss(LossModel):
    def realize(self, graph, step, streams):
        return FunctionalGraph.nominal(graph, step)

    def as_dict(self):
        return {'type': 'none'}


class BernoulliLoss(LossModel):
    """Each directed edge is available with probability lam, independently per step

    With symmetric=True both directions of a pair share one draw.
    """

    def __init__(self, lam: float, symmetric: bool = False):
        if not 0.0 <= lam <= 1.0:
            raise ConfigurationError(f"loss_model.lambda must lie in [0, 1], got {lam}")
        self.lam = float(lam)
        self.symmetric = bool(symmetric)

    def realize(self, graph, step, streams):
        draws = streams.uniforms(STREAM_LOSSES, step, graph.n_edges)
        if self.symmetric:
            canonical = np.minimum(np.arange(graph.n_edges), graph.reverse_index)
            draws = draws[canonical]
        return FunctionalGraph(graph, step, np.ones(graph.n_nodes, dtype=bool), draws < self.lam)

    def as_dict(self):
        return {'type': 'bernoulli', 'lambda': self.lam, 'symmetric_losses': self.symmetric}

    def describe(self):
        return f"Bernoulli(lambda={self.lam}{', symmetric' if self.symmetric else ''})"


@dataclass(frozen=True)
class ScheduleInterval:
    """Topology used for start_step <= k < end_step

    Either `edges` lists the available directed edges explicitly, or the nominal graph
    is used minus `drop_edges` and `drop_nodes`. Ids are 0-based.
    """

    start_step: int
    end_step: int
    edges: Optional[Tuple[Edge, ...]] = None
    drop_edges: Tuple[Edge, ...] = ()
    drop_nodes: Tuple[int, ...] = ()
    label: str = ''

    def masks(self, graph: NominalGraph) -> Tuple[np.ndarray, np.ndarray]:
        nodes = np.ones(graph.n_nodes, dtype=bool)
        nodes[list(self.drop_nodes)] = False
        if self.edges is not None:
            edges = np.zeros(graph.n_edges, dtype=bool)
            edges[[graph.edge_index[e] for e in self.edges]] = True
        else:
            edges = np.ones(graph.n_edges, dtype=bool)
        edges[[graph.edge_index[e] for e in self.drop_edges]] = False
        return nodes, edges


class ScheduledLoss(LossModel):
    """Piecewise-constant topology switching over disjoint, contiguous step intervals

    The last interval also covers its end step, so a schedule ending at the final step
    of the run covers the whole horizon.
    """

    def __init__(self, intervals: Sequence[ScheduleInterval], base: Optional[LossModel] = None):
        self.intervals = tuple(sorted(intervals, key=lambda iv: iv.start_step))
        self.base = base or NoLoss()
        self._starts = [iv.start_step for iv in self.intervals]
        self._mask_cache: Dict[int, Tuple[np.ndarray, np.ndarray]] = {}

    def check_coverage(self, n_steps: int):
        """Return the list of coverage problems for a run of n_steps steps"""
        problems = []
        if not self.intervals:
            return ["loss_model.schedule is empty"]
        if self.intervals[0].start_step != 0:
            problems.append(f"loss_model.schedule starts at step {self.intervals[0].start_step}, not 0")
        for previous, current in zip(self.intervals, self.intervals[1:]):
            if current.start_step != previous.end_step:
                problems.append(
                    f"loss_model.schedule intervals are not contiguous between steps "
                    f"{previous.end_step} and {current.start_step}"
                )
        if self.intervals[-1].end_step != n_steps:
            problems.append(
                f"loss_model.schedule ends at step {self.intervals[-1].end_step}, run has {n_steps} steps"
            )
        for iv in self.intervals:
            if iv.end_step <= iv.start_step:
                problems.append(f"loss_model.schedule interval [{iv.start_step}, {iv.end_step}) is empty")
        return problems

    def interval_at(self, step: int) -> int:
        position = bisect_right(self._starts, step) - 1
        if position >= 0:
            iv = self.intervals[position]
            last = position == len(self.intervals) - 1
            if iv.start_step <= step < iv.end_step or (last and step == iv.end_step):
                return position
        raise ConfigurationError(ERROR_MESSAGES['schedule_gap'].format(step=step))

    def realize(self, graph, step, streams):
        base = self.base.realize(graph, step, streams)
        position = self.interval_at(step)
        if position not in self._mask_cache:
            self._mask_cache[position] = self.intervals[position].masks(graph)
        nodes, edges = self._mask_cache[position]
        return FunctionalGraph(graph, step, base.active_nodes & nodes, base.edge_mask & edges)

    def as_dict(self):
        return {
            'type': 'schedule',
            'base': self.base.as_dict(),
            'intervals': [
                {
                    'start_step': iv.start_step,
                    'end_step': iv.end_step,
                    **({'edges': [[i + 1, j + 1] for i, j in iv.edges]} if iv.edges is not None else {}),
                    'drop_edges': [[i + 1, j + 1] for i, j in iv.drop_edges],
                    'drop_nodes': [n + 1 for n in iv.drop_nodes],
                    'label': iv.label,
                }
                for iv in self.intervals
            ],
        }

    def describe(self):
        return f"Schedule({len(self.intervals)} intervals) over {self.base.describe()}"


class NodeDeparture(LossModel):
    """Removes a node and all its edges from depart_step until return_step (exclusive)"""

    def __init__(self, node: int, depart_step: int, return_step: Optional[int] = None,
                 base: Optional[LossModel] = None):
        if return_step is not None and return_step <= depart_step:
            raise ConfigurationError(
                f"node departure of {node + 1}: return step {return_step} is not after departure {depart_step}"
            )
        self.node = int(node)
        self.depart_step = int(depart_step)
        self.return_step = None if return_step is None else int(return_step)
        self.base = base or NoLoss()

    def is_departed(self, step: int) -> bool:
        if step < self.depart_step:
            return False
        return self.return_step is None or step < self.return_step

    def realize(self, graph, step, streams):
        fg = self.base.realize(graph, step, streams)
        if not self.is_departed(step):
            return fg
        nodes = fg.active_nodes.copy()
        nodes[self.node] = False
        return FunctionalGraph(graph, step, nodes, fg.edge_mask)

    def as_dict(self):
        return {
            'type': 'departure',
            'node': self.node + 1,
            'depart_step': self.depart_step,
            'return_step': self.return_step,
            'base': self.base.as_dict(),
        }

    def describe(self):
        back = f", returns at step {self.return_step}" if self.return_step is not None else ''
        return f"Departure(node {self.node + 1} at step {self.depart_step}{back}) over {self.base.describe()}"


def realize_functional(g: NominalGraph, m: LossModel, k: int, rng_state: RunStreams) -> FunctionalGraph:
    """Functional graph of step k; deterministic given the run streams' seed and run index"""
    return m.realize(g, k, rng_state)
