import numpy as np
import pytest

from jetpipe.colmatrix import ColMatrix, quantize_matrix
from jetpipe.fixedpoint import Q12_12, to_float


class TestLayout:
    def test_element_offset_is_column_major(self):
        a = np.arange(12, dtype=float).reshape(3, 4)
        m = ColMatrix.from_dense(a)
        for r in range(3):
            for c in range(4):
                assert m.data[c * 3 + r] == a[r, c]
                assert m.at(r, c) == a[r, c]

    def test_column_is_contiguous_slice(self):
        a = np.arange(12, dtype=float).reshape(3, 4)
        m = ColMatrix.from_dense(a)
        for c in range(4):
            col = m.col(c)
            assert np.array_equal(col, a[:, c])
            assert col.base is m.data  # a view, not a copy

    def test_dense_roundtrip(self):
        rng = np.random.default_rng(3)
        a = rng.normal(size=(5, 7))
        assert np.array_equal(ColMatrix.from_dense(a).to_dense(), a)

    def test_transpose(self):
        rng = np.random.default_rng(4)
        a = rng.normal(size=(4, 6))
        assert np.array_equal(ColMatrix.from_dense(a).transpose().to_dense(), a.T)

    def test_set_col(self):
        m = ColMatrix.zeros(3, 2)
        m.set_col(1, [1.0, 2.0, 3.0])
        assert m.to_dense()[:, 1].tolist() == [1.0, 2.0, 3.0]

    def test_length_mismatch_rejected(self):
        with pytest.raises(ValueError):
            ColMatrix(3, 4, np.zeros(11))

    def test_shape(self):
        assert ColMatrix.zeros(2, 5).shape == (2, 5)


class TestFixedKind:
    def test_quantize_matrix(self):
        m = ColMatrix.from_dense([[1.5, -0.25], [0.0, 2.0]])
        q = quantize_matrix(m, Q12_12)
        assert q.is_fixed and q.spec == Q12_12
        assert q.to_dense().tolist() == [[6144, -1024], [0, 8192]]
        assert np.array_equal(q.values(), m.to_dense())

    def test_values_rescale(self):
        q = ColMatrix(1, 1, np.array([4096], dtype=np.int64), Q12_12)
        assert q.values()[0, 0] == 1.0
        assert to_float(q.at(0, 0), Q12_12) == 1.0

    def test_double_quantize_rejected(self):
        q = quantize_matrix(ColMatrix.zeros(2, 2), Q12_12)
        with pytest.raises(ValueError):
            quantize_matrix(q, Q12_12)

    def test_fixed_requires_int_raws(self):
        with pytest.raises(ValueError):
            ColMatrix(1, 1, np.zeros(1), Q12_12)
