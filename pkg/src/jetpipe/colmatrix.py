"""Column-major 2-D containers for datapath intermediates.

Every intermediate matrix on the modeled datapath (I, B, E, aggregated E,
C, O) is stored column-major: element (r, c) lives at flat offset
c * rows + r, so a column is one contiguous slice. The per-edge and
per-node functions consume whole columns, which is why there is no
row-major variant.

A ColMatrix holds either real values (float64) or fixed-point raws
(int64 plus a FixedSpec); kernels dispatch on ``spec``.
"""

from __future__ import annotations

import numpy as np

from .fixedpoint import FixedSpec, quantize_array, to_float


class ColMatrix:
    """2-D numeric matrix with column-major element layout."""

    __slots__ = ("rows", "cols", "data", "spec")

    def __init__(self, rows: int, cols: int, data: np.ndarray, spec: FixedSpec | None = None):
        if rows < 0 or cols < 0:
            raise ValueError(f"bad dimensions {rows}x{cols}")
        data = np.asarray(data)
        if data.ndim != 1 or data.size != rows * cols:
            raise ValueError(f"data length {data.size} != rows*cols = {rows * cols}")
        if spec is not None and data.dtype != np.int64:
            raise ValueError("fixed-point matrices store int64 raws")
        self.rows = rows
        self.cols = cols
        self.data = data
        self.spec = spec

    @property
    def shape(self) -> tuple[int, int]:
        return (self.rows, self.cols)

    @property
    def is_fixed(self) -> bool:
        return self.spec is not None

    @classmethod
    def zeros(cls, rows: int, cols: int, spec: FixedSpec | None = None) -> "ColMatrix":
        dtype = np.int64 if spec is not None else np.float64
        return cls(rows, cols, np.zeros(rows * cols, dtype=dtype), spec)

    @classmethod
    def from_dense(cls, a) -> "ColMatrix":
        """Real-valued matrix from any 2-D array-like (row-major input ok)."""
        a = np.asarray(a, dtype=np.float64)
        if a.ndim != 2:
            raise ValueError("from_dense expects a 2-D array")
        return cls(a.shape[0], a.shape[1], a.flatten(order="F"))

    def to_dense(self) -> np.ndarray:
        """2-D array of the stored elements (raws when fixed)."""
        return self.data.reshape((self.cols, self.rows)).T

    def values(self) -> np.ndarray:
        """2-D array of represented values (raws rescaled when fixed)."""
        if self.spec is None:
            return self.to_dense()
        return to_float(self.to_dense(), self.spec)

    def col(self, c: int) -> np.ndarray:
        """Contiguous view of column c."""
        return self.data[c * self.rows:(c + 1) * self.rows]

    def set_col(self, c: int, v) -> None:
        self.data[c * self.rows:(c + 1) * self.rows] = v

    def at(self, r: int, c: int):
        return self.data[c * self.rows + r]

    def copy(self) -> "ColMatrix":
        return ColMatrix(self.rows, self.cols, self.data.copy(), self.spec)

    def transpose(self) -> "ColMatrix":
        out = ColMatrix.zeros(self.cols, self.rows, self.spec)
        out.data[:] = self.to_dense().T.flatten(order="F")
        return out

    def __repr__(self) -> str:
        kind = f"fixed[{self.spec}]" if self.spec else "real"
        return f"ColMatrix({self.rows}x{self.cols}, {kind})"


def quantize_matrix(m: ColMatrix, spec: FixedSpec) -> ColMatrix:
    """Quantize a real ColMatrix into fixed-point raws under ``spec``."""
    if m.is_fixed:
        raise ValueError("matrix is already fixed point")
    return ColMatrix(m.rows, m.cols, quantize_array(m.data, spec), spec)
