"""Fully connected directed graphs and their structured adjacency.

The classifier's input graph has n_o nodes (particles) and every ordered
pair of distinct nodes as an edge, so n_e = n_o * (n_o - 1). The
receiving/sending matrices R_r and R_s are one-hot per column, which
means they never need to be stored: the edge numbering below bakes their
pattern into plain index arithmetic, and the hot kernels turn the matrix
products into loads, stores and a few additions.

Edge numbering is receiver-major: edges [i*(n_o-1), (i+1)*(n_o-1)) all
point at node i, with sender indices ascending and skipping i. Block
contiguity is what lets the aggregation kernel finish one output column
before touching the next.

Dense R_r / R_s materialization exists for oracle testing only; nothing
on the hot path builds them.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .colmatrix import ColMatrix


@dataclass(frozen=True)
class GraphConfig:
    """Graph dimensions: node count and per-node feature count."""

    n_o: int
    p: int

    def __post_init__(self):
        if self.n_o < 2:
            raise ValueError(f"need at least 2 nodes, got {self.n_o}")
        if self.p < 1:
            raise ValueError(f"need at least 1 feature, got {self.p}")

    @property
    def n_e(self) -> int:
        return self.n_o * (self.n_o - 1)


@dataclass(frozen=True)
class AdjacencyStructure:
    """Receiver/sender of every edge as pure index functions."""

    graph: GraphConfig

    def receiver(self, e: int) -> int:
        self._check_edge(e)
        return e // (self.graph.n_o - 1)

    def sender(self, e: int) -> int:
        self._check_edge(e)
        i, j = divmod(e, self.graph.n_o - 1)
        return j if j < i else j + 1

    def receiver_block(self, i: int) -> range:
        """Edge indices received by node i (contiguous by construction)."""
        if not 0 <= i < self.graph.n_o:
            raise ValueError(f"node {i} out of range")
        w = self.graph.n_o - 1
        return range(i * w, (i + 1) * w)

    def _check_edge(self, e: int) -> None:
        if not 0 <= e < self.graph.n_e:
            raise ValueError(f"edge {e} out of range [0, {self.graph.n_e})")

    def receivers(self) -> np.ndarray:
        """receiver(e) for all edges as one array."""
        return np.repeat(np.arange(self.graph.n_o), self.graph.n_o - 1)

    def senders(self) -> np.ndarray:
        """sender(e) for all edges as one array."""
        n = self.graph.n_o
        j = np.tile(np.arange(n - 1), n)
        i = self.receivers()
        return np.where(j < i, j, j + 1)


def make_adjacency(graph: GraphConfig) -> AdjacencyStructure:
    return AdjacencyStructure(graph)


def _materialize(adj: AdjacencyStructure, index_of) -> ColMatrix:
    g = adj.graph
    m = ColMatrix.zeros(g.n_o, g.n_e)
    for e in range(g.n_e):
        m.data[e * g.n_o + index_of(e)] = 1.0
    return m


def materialize_rr(adj: AdjacencyStructure) -> ColMatrix:
    """Dense n_o x n_e receiving matrix (test oracle only)."""
    return _materialize(adj, adj.receiver)


def materialize_rs(adj: AdjacencyStructure) -> ColMatrix:
    """Dense n_o x n_e sending matrix (test oracle only)."""
    return _materialize(adj, adj.sender)
