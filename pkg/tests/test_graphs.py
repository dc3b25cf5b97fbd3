import numpy as np
import pytest

from jetpipe.graphs import GraphConfig, make_adjacency, materialize_rr, materialize_rs


def brute_force_edges(n_o):
    """Independent enumeration: (receiver, sender) pairs, receiver-major,
    senders ascending and skipping the receiver."""
    out = []
    for i in range(n_o):
        for j in range(n_o):
            if j != i:
                out.append((i, j))
    return out


class TestGraphConfig:
    def test_edge_count_formula(self):
        assert GraphConfig(4, 1).n_e == 12
        assert GraphConfig(30, 16).n_e == 870
        assert GraphConfig(50, 16).n_e == 2450

    def test_rejects_degenerate(self):
        with pytest.raises(ValueError):
            GraphConfig(1, 3)
        with pytest.raises(ValueError):
            GraphConfig(4, 0)


class TestAdjacency:
    def test_receiver_sequence_n4(self):
        adj = make_adjacency(GraphConfig(4, 1))
        assert [adj.receiver(e) for e in range(12)] == [0, 0, 0, 1, 1, 1, 2, 2, 2, 3, 3, 3]

    def test_sender_block_skips_self(self):
        adj = make_adjacency(GraphConfig(4, 1))
        assert [adj.sender(e) for e in adj.receiver_block(1)] == [0, 2, 3]

    def test_matches_brute_force(self):
        for n_o in (2, 3, 4, 7, 30):
            adj = make_adjacency(GraphConfig(n_o, 1))
            want = brute_force_edges(n_o)
            got = [(adj.receiver(e), adj.sender(e)) for e in range(n_o * (n_o - 1))]
            assert got == want

    def test_no_self_loops(self):
        for n_o in (2, 5, 16, 33):
            adj = make_adjacency(GraphConfig(n_o, 1))
            for e in range(n_o * (n_o - 1)):
                assert adj.receiver(e) != adj.sender(e)

    def test_vectorized_forms_agree(self):
        adj = make_adjacency(GraphConfig(9, 1))
        assert adj.receivers().tolist() == [adj.receiver(e) for e in range(72)]
        assert adj.senders().tolist() == [adj.sender(e) for e in range(72)]

    def test_edge_out_of_range(self):
        adj = make_adjacency(GraphConfig(3, 1))
        with pytest.raises(ValueError):
            adj.receiver(6)
        with pytest.raises(ValueError):
            adj.sender(-1)


class TestMaterialized:
    def test_smallest_graph(self):
        adj = make_adjacency(GraphConfig(2, 1))
        assert materialize_rr(adj).to_dense().tolist() == [[1, 0], [0, 1]]
        assert materialize_rs(adj).to_dense().tolist() == [[0, 1], [1, 0]]

    def test_n3_sums(self):
        adj = make_adjacency(GraphConfig(3, 1))
        rr = materialize_rr(adj).to_dense()
        assert rr.sum(axis=0).tolist() == [1] * 6
        assert rr.sum(axis=1).tolist() == [2] * 3

    def test_n30_row_sums_brute_force(self):
        adj = make_adjacency(GraphConfig(30, 1))
        rr = materialize_rr(adj).to_dense()
        counts = [0] * 30
        for (i, _j) in brute_force_edges(30):
            counts[i] += 1
        assert rr.sum(axis=1).tolist() == counts == [29] * 30

    @pytest.mark.parametrize("n_o", [2, 3, 5, 8, 13, 21, 34, 47, 64])
    def test_structure_invariants(self, n_o):
        adj = make_adjacency(GraphConfig(n_o, 1))
        rr = materialize_rr(adj).to_dense()
        rs = materialize_rs(adj).to_dense()
        for m in (rr, rs):
            assert ((m == 0) | (m == 1)).all()
            assert (m.sum(axis=0) == 1).all()       # one-hot columns
            assert (m.sum(axis=1) == n_o - 1).all()  # every node on n_o-1 edges
        # an edge's receiver and sender are never the same row
        assert not ((rr == 1) & (rs == 1)).any()
        # index functions agree with the dense matrices elementwise
        for e in range(n_o * (n_o - 1)):
            assert rr[adj.receiver(e), e] == 1
            assert rs[adj.sender(e), e] == 1
