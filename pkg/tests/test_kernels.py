import numpy as np
import pytest

from jetpipe.colmatrix import ColMatrix, quantize_matrix
from jetpipe.fixedpoint import Q12_12
from jetpipe.graphs import GraphConfig, make_adjacency, materialize_rr, materialize_rs
from jetpipe.kernels import (
    OpCounter,
    aggregate_outer,
    concat_cols,
    dense_mmm,
    gather_b1_b2,
    reduction_report,
)


def triple_loop_mmm(a, b):
    """Independent reference product: bare Python loops, no numpy algebra."""
    rows, inner, cols = a.shape[0], a.shape[1], b.shape[1]
    out = [[0.0] * cols for _ in range(rows)]
    for r in range(rows):
        for c in range(cols):
            s = 0.0
            for k in range(inner):
                s += a[r][k] * b[k][c]
            out[r][c] = s
    return np.array(out)


class TestDenseMMM:
    def test_identity(self):
        m = ColMatrix.from_dense([[1.0, 2.0], [3.0, 4.0]])
        eye = ColMatrix.from_dense(np.eye(2))
        assert np.array_equal(dense_mmm(m, eye).to_dense(), m.to_dense())

    def test_hand_arithmetic(self):
        a = ColMatrix.from_dense([[1.0, 2.0]])
        b = ColMatrix.from_dense([[3.0], [4.0]])
        assert dense_mmm(a, b).to_dense().tolist() == [[11.0]]

    def test_matches_triple_loop(self):
        rng = np.random.default_rng(21)
        a = rng.normal(size=(5, 7))
        b = rng.normal(size=(7, 3))
        got = dense_mmm(ColMatrix.from_dense(a), ColMatrix.from_dense(b)).to_dense()
        assert np.allclose(got, triple_loop_mmm(a, b), rtol=1e-12)

    def test_counts(self):
        counter = OpCounter()
        a = ColMatrix.zeros(5, 7)
        b = ColMatrix.zeros(7, 3)
        dense_mmm(a, b, counter=counter)
        assert counter.multiplications == 5 * 7 * 3
        assert counter.additions == 5 * 6 * 3

    def test_dimension_mismatch(self):
        with pytest.raises(ValueError):
            dense_mmm(ColMatrix.zeros(2, 3), ColMatrix.zeros(4, 2))

    def test_mixed_kinds_rejected(self):
        fixed = quantize_matrix(ColMatrix.zeros(2, 2), Q12_12)
        with pytest.raises(ValueError):
            dense_mmm(fixed, ColMatrix.zeros(2, 2))


class TestGather:
    def test_n3_explicit(self):
        graph = GraphConfig(3, 2)
        adj = make_adjacency(graph)
        i_mat = ColMatrix.from_dense([[1.0, 2.0, 3.0], [4.0, 5.0, 6.0]])
        b1, b2 = gather_b1_b2(i_mat, adj)
        cols = lambda m: [m.to_dense()[:, c].tolist() for c in range(m.cols)]
        n0, n1, n2 = [1.0, 4.0], [2.0, 5.0], [3.0, 6.0]
        assert cols(b1) == [n0, n0, n1, n1, n2, n2]
        assert cols(b2) == [n1, n2, n0, n2, n0, n1]

    def test_n2_swap(self):
        adj = make_adjacency(GraphConfig(2, 1))
        i_mat = ColMatrix.from_dense([[7.0, 9.0]])
        b1, b2 = gather_b1_b2(i_mat, adj)
        assert b1.to_dense().tolist() == [[7.0, 9.0]]
        assert b2.to_dense().tolist() == [[9.0, 7.0]]

    def test_no_arithmetic_at_production_size(self):
        graph = GraphConfig(30, 16)
        adj = make_adjacency(graph)
        rng = np.random.default_rng(22)
        i_mat = ColMatrix.from_dense(rng.normal(size=(16, 30)))
        counter = OpCounter()
        gather_b1_b2(i_mat, adj, counter=counter)
        assert counter.multiplications == 0
        assert counter.additions == 0
        assert counter.iterations == graph.n_e

    def test_equals_dense_oracle(self):
        rng = np.random.default_rng(23)
        for n_o in (2, 3, 5, 11):
            graph = GraphConfig(n_o, 4)
            adj = make_adjacency(graph)
            i_mat = ColMatrix.from_dense(rng.normal(size=(4, n_o)))
            b1, b2 = gather_b1_b2(i_mat, adj)
            assert np.array_equal(b1.to_dense(),
                                  dense_mmm(i_mat, materialize_rr(adj)).to_dense())
            assert np.array_equal(b2.to_dense(),
                                  dense_mmm(i_mat, materialize_rs(adj)).to_dense())

    def test_wrong_width_rejected(self):
        adj = make_adjacency(GraphConfig(3, 2))
        with pytest.raises(ValueError):
            gather_b1_b2(ColMatrix.zeros(2, 4), adj)


class TestAggregate:
    def test_hand_example(self):
        adj = make_adjacency(GraphConfig(3, 1))
        e = ColMatrix.from_dense([[1.0, 2.0, 3.0, 4.0, 5.0, 6.0]])
        assert aggregate_outer(e, adj).to_dense().tolist() == [[3.0, 7.0, 11.0]]

    def test_zeros(self):
        adj = make_adjacency(GraphConfig(4, 1))
        out = aggregate_outer(ColMatrix.zeros(3, 12), adj)
        assert not out.to_dense().any()

    def test_production_addition_count(self):
        graph = GraphConfig(30, 16)
        adj = make_adjacency(graph)
        rng = np.random.default_rng(24)
        e = ColMatrix.from_dense(rng.normal(size=(8, graph.n_e)))
        counter = OpCounter()
        aggregate_outer(e, adj, counter=counter)
        assert counter.additions == 6960
        assert counter.multiplications == 0

    def test_reads_each_column_once_sequentially(self):
        graph = GraphConfig(9, 1)
        adj = make_adjacency(graph)
        rng = np.random.default_rng(25)
        e = ColMatrix.from_dense(rng.normal(size=(5, graph.n_e)))
        counter = OpCounter()
        aggregate_outer(e, adj, counter=counter)
        assert counter.element_reads == 5 * graph.n_e
        assert counter.read_columns == list(range(graph.n_e))
        assert counter.nonsequential_reads == 0

    def test_equals_dense_oracle_real(self):
        rng = np.random.default_rng(26)
        for n_o in (2, 4, 9, 17):
            graph = GraphConfig(n_o, 1)
            adj = make_adjacency(graph)
            e = ColMatrix.from_dense(rng.uniform(-1e6, 1e6, size=(6, graph.n_e)))
            got = aggregate_outer(e, adj).to_dense()
            want = dense_mmm(e, materialize_rr(adj).transpose()).to_dense()
            assert np.allclose(got, want, rtol=1e-12)

    def test_equals_dense_oracle_fixed_exact(self):
        rng = np.random.default_rng(27)
        for n_o in (2, 5, 12):
            graph = GraphConfig(n_o, 1)
            adj = make_adjacency(graph)
            e = quantize_matrix(
                ColMatrix.from_dense(rng.uniform(-1, 1, size=(4, graph.n_e))), Q12_12)
            rrt = quantize_matrix(materialize_rr(adj).transpose(), Q12_12)
            got = aggregate_outer(e, adj)
            want = dense_mmm(e, rrt)
            assert got.spec == want.spec == Q12_12
            assert np.array_equal(got.to_dense(), want.to_dense())

    def test_wrong_width_rejected(self):
        adj = make_adjacency(GraphConfig(3, 1))
        with pytest.raises(ValueError):
            aggregate_outer(ColMatrix.zeros(2, 5), adj)


class TestConcat:
    def test_edge_feature_stack_dims(self):
        b1, b2 = ColMatrix.zeros(16, 870), ColMatrix.zeros(16, 870)
        b = concat_cols(b1, b2)
        assert b.shape == (32, 870)

    def test_shortcut_stack_dims(self):
        i_mat, ebar = ColMatrix.zeros(16, 30), ColMatrix.zeros(8, 30)
        c = concat_cols(i_mat, ebar)
        assert c.shape == (24, 30)

    def test_one_by_one(self):
        a = ColMatrix.from_dense([[3.0]])
        b = ColMatrix.from_dense([[5.0]])
        assert concat_cols(a, b).to_dense().tolist() == [[3.0], [5.0]]

    def test_columns_interleave_correctly(self):
        rng = np.random.default_rng(28)
        top = rng.normal(size=(2, 4))
        bot = rng.normal(size=(3, 4))
        got = concat_cols(ColMatrix.from_dense(top), ColMatrix.from_dense(bot))
        assert np.array_equal(got.to_dense(), np.vstack([top, bot]))

    def test_mismatch_rejected(self):
        with pytest.raises(ValueError):
            concat_cols(ColMatrix.zeros(2, 3), ColMatrix.zeros(2, 4))


class TestReductionReport:
    def test_production_graph(self):
        rep = reduction_report(GraphConfig(30, 16), d_e=8)
        mmm3 = rep.row("mmm3")
        assert mmm3.custom_adds == 6960
        assert mmm3.dense_adds == 8 * 30 * 870
        assert 0.032 <= mmm3.add_ratio <= 0.034
        for name in ("mmm1", "mmm2"):
            row = rep.row(name)
            assert row.custom_mults == 0 and row.custom_adds == 0
        assert abs(rep.row("mmm1").iter_reduction_pct - 96.7) <= 0.05

    def test_smallest_graph(self):
        rep = reduction_report(GraphConfig(2, 1), d_e=1)
        assert rep.row("mmm1").iter_reduction_pct == pytest.approx(50.0)

    def test_csv_shape(self):
        text = reduction_report(GraphConfig(4, 2), d_e=3).to_csv()
        lines = text.strip().split("\n")
        assert lines[0] == "kernel,dense_mults,dense_adds,custom_mults,custom_adds,iter_reduction_pct"
        assert len(lines) == 4

    def test_rejects_bad_de(self):
        with pytest.raises(ValueError):
            reduction_report(GraphConfig(4, 2), d_e=0)
