"""
Per-step local geometry of every agent: raw transform estimate, feasibility, RAL
factor and convergence indicator.

The RAL factor of an agent depends only on the nominal configuration and on which of
its edges are available, so it is cached per (agent, availability pattern). Quantities
that are sums over an agent's edges are accumulated per source with bincount.
"""
from dataclasses import dataclass
from typing import Dict, Optional, Tuple

import numpy as np

from config import DEFAULT_PSI_MAX
from estimation.ral import constrained_ral, constrained_variance_factor, ral_factor
from graph.nominal import FunctionalGraph, NominalGraph


@dataclass(frozen=True, eq=False)
class GeometrySnapshot:
    """Local geometry of all agents at one step

    Attributes:
        theta: Raw transform estimates (N, D, D), zero where infeasible
        feasible: Agents whose estimate exists (N,)
        phi_columns: D x M, column m is the RAL-factor column of available edge m of a
            feasible agent (zero otherwise); empty in constrained modes
        psi: Convergence indicator (N,)
        counted: Number of neighbours counted in psi (N,)
    """

    step: int
    fg: FunctionalGraph
    theta: np.ndarray
    feasible: np.ndarray
    phi_columns: np.ndarray
    psi: np.ndarray
    counted: np.ndarray
    constraint: str
    nominal_relative: np.ndarray

    def reconstruct(self, columns: np.ndarray, thetas: Optional[np.ndarray] = None) -> np.ndarray:
        """Theta_i p_ij for the given edge columns, D x len(columns)"""
        thetas = self.theta if thetas is None else thetas
        sources = self.fg.graph.sources[columns]
        return np.einsum('mde,em->dm', thetas[sources], self.nominal_relative[:, columns])

    def variance_factor(self, columns: np.ndarray) -> np.ndarray:
        """Scalar k_ij with R_geo = k_ij R for a noise covariance R shared by all edges

        Affine mode: k = ||Phi_i^T p_ij||^2. Constrained modes: ||p_ij||^2 / ||H_i||_F^2.
        """
        graph = self.fg.graph
        p = self.nominal_relative[:, columns]
        sources = graph.sources[columns]
        mask = self.fg.edge_mask
        if self.constraint == 'affine':
            gram = np.zeros((graph.n_nodes,) + (p.shape[0],) * 2)
            outer = np.einsum('dm,em->mde', self.phi_columns, self.phi_columns)
            np.add.at(gram, graph.sources, outer)
            return np.einsum('dm,mde,em->m', p, gram[sources], p)
        factors = np.empty(columns.size)
        for i in np.unique(sources):
            sl = graph.out_slices[i]
            picked = sources == i
            factors[picked] = constrained_variance_factor(p[:, picked], self.nominal_relative[:, sl][:, mask[sl]])
        return factors

    def bound_coefficients(self, R: np.ndarray, n_active: Optional[int] = None) -> Tuple[np.ndarray, np.ndarray]:
        """Indicator bound coefficients (c, b) of every agent, NaN where undefined

        c_i = (N / n_i) sum_j ||B_i Phi_i^T - B_j Phi_j^T||_F^2
        b_i = (tr R / n_i) sum_j (||Phi_i||_F^2 + ||Phi_j||_F^2)
        over the n_i available neighbours j counted in psi_i.
        """
        graph = self.fg.graph
        n = graph.n_nodes
        n_active = int(self.fg.active_nodes.sum()) if n_active is None else n_active
        c = np.full(n, np.nan)
        b = np.full(n, np.nan)
        if self.constraint != 'affine':
            return c, b

        # B_i Phi_i^T as an N x D matrix per agent: +sum of phi columns on row i,
        # -phi column m on row target(m)
        phi_t = self.phi_columns.T
        products = np.zeros((n, n, phi_t.shape[1]))
        np.add.at(products, (graph.sources, graph.sources), phi_t)
        np.add.at(products, (graph.sources, graph.targets), -phi_t)
        phi_norm = np.bincount(graph.sources, weights=np.sum(phi_t ** 2, axis=1), minlength=n)

        edges = self._counted_edges()
        sources = graph.sources[edges]
        targets = graph.targets[edges]
        diff = np.sum((products[sources] - products[targets]) ** 2, axis=(1, 2))
        counted = self.counted
        with np.errstate(invalid='ignore', divide='ignore'):
            c_sum = np.bincount(sources, weights=diff, minlength=n)
            b_sum = np.bincount(sources, weights=phi_norm[sources] + phi_norm[targets], minlength=n)
            has = counted > 0
            c[has] = n_active / counted[has] * c_sum[has]
            b[has] = float(np.trace(R)) / counted[has] * b_sum[has]
        return c, b

    def _counted_edges(self) -> np.ndarray:
        graph = self.fg.graph
        return np.flatnonzero(
            self.fg.edge_mask & self.feasible[graph.sources] & self.feasible[graph.targets]
        )


class LocalGeometry:
    """Computes a GeometrySnapshot every step and carries the indicator over gaps"""

    def __init__(self, graph: NominalGraph, P: np.ndarray, constraint: str = 'affine',
                 psi_max: float = DEFAULT_PSI_MAX):
        self.graph = graph
        self.P = np.asarray(P, dtype=float)
        self.dim = self.P.shape[0]
        self.constraint = constraint
        self.psi_max = float(psi_max)
        # p_ij = p_i - p_j of every edge column
        self.nominal_relative = self.P[:, graph.sources] - self.P[:, graph.targets]
        self._factor_cache: Dict[Tuple[int, bytes], Optional[np.ndarray]] = {}
        self.psi = np.full(graph.n_nodes, self.psi_max)

    def reset(self):
        self.psi = np.full(self.graph.n_nodes, self.psi_max)

    def factor(self, i: int, pattern: np.ndarray) -> Optional[np.ndarray]:
        """Cached RAL factor of agent i for an availability pattern of its out-edges"""
        key = (i, pattern.tobytes())
        if key not in self._factor_cache:
            sl = self.graph.out_slices[i]
            self._factor_cache[key] = ral_factor(self.nominal_relative[:, sl][:, pattern])
        return self._factor_cache[key]

    def update(self, fg: FunctionalGraph, Y: np.ndarray) -> GeometrySnapshot:
        """Local geometry of all agents from this step's observations Y (D x M)"""
        graph = self.graph
        n, dim = graph.n_nodes, self.dim
        mask = fg.edge_mask
        feasible = np.zeros(n, dtype=bool)
        theta = np.zeros((n, dim, dim))
        phi_columns = np.zeros((dim, graph.n_edges))

        if self.constraint == 'affine':
            for i in np.flatnonzero(fg.active_nodes):
                sl = graph.out_slices[i]
                pattern = mask[sl]
                if pattern.sum() < dim:
                    continue
                Phi = self.factor(int(i), pattern)
                if Phi is None:
                    continue
                feasible[i] = True
                phi_columns[:, np.arange(sl.start, sl.stop)[pattern]] = Phi
            # Theta_i = Y_i Phi_i^T, summed edge by edge
            np.add.at(theta, graph.sources, np.einsum('dm,em->mde', np.where(mask, Y, 0.0), phi_columns))
        else:
            for i in np.flatnonzero(fg.active_nodes):
                sl = graph.out_slices[i]
                pattern = mask[sl]
                if not pattern.any():
                    continue
                estimate = constrained_ral(Y[:, sl][:, pattern], self.nominal_relative[:, sl][:, pattern],
                                           self.constraint)
                if estimate is None:
                    continue
                feasible[i] = True
                theta[i] = estimate

        counted_edges = np.flatnonzero(mask & feasible[graph.sources] & feasible[graph.targets])
        sources = graph.sources[counted_edges]
        targets = graph.targets[counted_edges]
        disagreement = np.sum((theta[sources] - theta[targets]) ** 2, axis=(1, 2))
        counted = np.bincount(sources, minlength=n)
        total = np.bincount(sources, weights=disagreement, minlength=n)
        fresh = feasible & (counted > 0)
        psi = self.psi.copy()
        psi[fresh] = total[fresh] / counted[fresh]
        self.psi = psi

        return GeometrySnapshot(
            step=fg.step,
            fg=fg,
            theta=theta,
            feasible=feasible,
            phi_columns=phi_columns,
            psi=psi,
            counted=np.where(feasible, counted, 0),
            constraint=self.constraint,
            nominal_relative=self.nominal_relative,
        )
