"""Structured matrix kernels and their dense reference forms.

Three matrix products dominate the interaction-network forward pass:

* MMM1/2: B1 = I @ R_r and B2 = I @ R_s. Because every R column is
  one-hot with a static pattern, both collapse to pure column gathers:
  no multiplications, no additions.
* MMM3: the aggregation E @ R_r^T. Worked column-at-a-time in edge
  order (an outer-product formulation), the one-hot rows reduce it to
  block sums: zero multiplications and one addition per edge per
  feature, i.e. d_e * n_e additions instead of d_e * n_o * n_e. Each E
  column is read exactly once, in ascending order, and one output
  column completes before the next is touched.

``dense_mmm`` is the plain product used as the equivalence oracle.
Kernels run on real or fixed-point ColMatrix inputs; fixed-point sums
use a wide accumulator format and cast back to the input format, in a
fixed (edge-ascending) order so results are bit-reproducible.

Instrumentation via OpCounter is optional and never changes numerics.
"""

from __future__ import annotations

import io
from dataclasses import dataclass, field

import numpy as np

from .colmatrix import ColMatrix
from .fixedpoint import Q16_16, FixedSpec, downcast_array, fx_acc_array, fx_mul_array, saturate
from .graphs import AdjacencyStructure, GraphConfig


@dataclass
class OpCounter:
    """Arithmetic/access counts for one kernel call.

    ``iterations`` counts innermost loop trips as the kernel is coded.
    Column reads of the main input are recorded to check sequential
    access: a read at a lower column offset than its predecessor counts
    as nonsequential.
    """

    multiplications: int = 0
    additions: int = 0
    iterations: int = 0
    nonsequential_reads: int = 0
    element_reads: int = 0
    read_columns: list[int] = field(default_factory=list)

    def reset(self) -> None:
        self.multiplications = 0
        self.additions = 0
        self.iterations = 0
        self.nonsequential_reads = 0
        self.element_reads = 0
        self.read_columns.clear()

    def record_col_read(self, col: int, n_elements: int) -> None:
        if self.read_columns and col < self.read_columns[-1]:
            self.nonsequential_reads += 1
        self.read_columns.append(col)
        self.element_reads += n_elements


def _check_same_kind(a: ColMatrix, b: ColMatrix) -> None:
    if a.spec != b.spec:
        raise ValueError(f"mixed element kinds: {a.spec} vs {b.spec}")


def dense_mmm(a: ColMatrix, b: ColMatrix, counter: OpCounter | None = None,
              acc_spec: FixedSpec = Q16_16) -> ColMatrix:
    """Standard matrix product, column-major result.

    Real mode delegates the arithmetic to numpy; counts are the dense
    algorithm's operation totals (a.rows*a.cols*b.cols multiplications,
    a.rows*(a.cols-1)*b.cols additions). Fixed mode multiplies into
    ``acc_spec``, accumulates in ascending inner index, and casts the
    result back to the input format.
    """
    if a.cols != b.rows:
        raise ValueError(f"inner dims differ: {a.shape} x {b.shape}")
    _check_same_kind(a, b)
    if counter is not None:
        counter.reset()
        counter.multiplications = a.rows * a.cols * b.cols
        counter.additions = a.rows * max(a.cols - 1, 0) * b.cols
        counter.iterations = b.cols
    if not a.is_fixed:
        out = ColMatrix.zeros(a.rows, b.cols)
        ad, bd = a.to_dense(), b.to_dense()
        out.data[:] = (ad @ bd).flatten(order="F")
        return out

    out = ColMatrix.zeros(a.rows, b.cols, a.spec)
    ad = a.to_dense()
    bd = b.to_dense()
    acc = np.zeros((a.rows, b.cols), dtype=np.int64)
    for k in range(a.cols):
        term = fx_mul_array(ad[:, k:k + 1], a.spec, bd[k:k + 1, :], b.spec, acc_spec)
        acc = fx_acc_array(acc, term, acc_spec)
    out.data[:] = downcast_array(acc, acc_spec, a.spec).flatten(order="F")
    return out


def gather_b1_b2(i_mat: ColMatrix, adj: AdjacencyStructure,
                 counter: OpCounter | None = None) -> tuple[ColMatrix, ColMatrix]:
    """I @ R_r and I @ R_s as pure gathers: B1[:, e] = I[:, receiver(e)],
    B2[:, e] = I[:, sender(e)]. Load/store only."""
    g = adj.graph
    if i_mat.cols != g.n_o:
        raise ValueError(f"input has {i_mat.cols} columns, graph has {g.n_o} nodes")
    if counter is not None:
        counter.reset()
    b1 = ColMatrix.zeros(i_mat.rows, g.n_e, i_mat.spec)
    b2 = ColMatrix.zeros(i_mat.rows, g.n_e, i_mat.spec)
    receivers = adj.receivers()
    senders = adj.senders()
    for e in range(g.n_e):
        b1.set_col(e, i_mat.col(receivers[e]))
        b2.set_col(e, i_mat.col(senders[e]))
        if counter is not None:
            counter.iterations += 1
            counter.record_col_read(int(receivers[e]), i_mat.rows)
            counter.record_col_read(int(senders[e]), i_mat.rows)
    return b1, b2


def aggregate_outer(e_mat: ColMatrix, adj: AdjacencyStructure,
                    counter: OpCounter | None = None,
                    acc_spec: FixedSpec = Q16_16) -> ColMatrix:
    """E @ R_r^T via per-node block sums in edge order.

    Output column i is the sum of E columns in receiver block i. E is
    read once, strictly sequentially; block sums accumulate in edge
    ascending order so fixed-point results are reproducible.
    """
    g = adj.graph
    if e_mat.cols != g.n_e:
        raise ValueError(f"input has {e_mat.cols} columns, graph has {g.n_e} edges")
    if counter is not None:
        counter.reset()
    out = ColMatrix.zeros(e_mat.rows, g.n_o, e_mat.spec)
    fixed = e_mat.is_fixed
    for i in range(g.n_o):
        if fixed:
            acc = np.zeros(e_mat.rows, dtype=np.int64)
        else:
            acc = np.zeros(e_mat.rows, dtype=np.float64)
        for e in adj.receiver_block(i):
            col = e_mat.col(e)
            if counter is not None:
                counter.iterations += 1
                counter.additions += e_mat.rows
                counter.record_col_read(e, e_mat.rows)
            if fixed:
                term = saturate(downcast_array(col, e_mat.spec, acc_spec), acc_spec)
                acc = fx_acc_array(acc, term, acc_spec)
            else:
                acc = acc + col
        if fixed:
            out.set_col(i, downcast_array(acc, acc_spec, e_mat.spec))
        else:
            out.set_col(i, acc)
    return out


def concat_cols(top: ColMatrix, bottom: ColMatrix) -> ColMatrix:
    """Stack column c of ``top`` over column c of ``bottom``."""
    if top.cols != bottom.cols:
        raise ValueError(f"column counts differ: {top.cols} vs {bottom.cols}")
    _check_same_kind(top, bottom)
    out = ColMatrix.zeros(top.rows + bottom.rows, top.cols, top.spec)
    for c in range(top.cols):
        out.data[c * out.rows:c * out.rows + top.rows] = top.col(c)
        out.data[c * out.rows + top.rows:(c + 1) * out.rows] = bottom.col(c)
    return out


@dataclass(frozen=True)
class KernelReduction:
    """Dense vs structured operation counts for one matrix unit."""

    kernel: str
    dense_mults: int
    dense_adds: int
    custom_mults: int
    custom_adds: int
    iter_reduction_pct: float

    @property
    def add_ratio(self) -> float:
        return self.custom_adds / self.dense_adds if self.dense_adds else 0.0


@dataclass(frozen=True)
class ReductionSummary:
    graph: GraphConfig
    d_e: int
    rows: tuple[KernelReduction, ...]

    def row(self, kernel: str) -> KernelReduction:
        for r in self.rows:
            if r.kernel == kernel:
                return r
        raise KeyError(kernel)

    def to_csv(self) -> str:
        buf = io.StringIO()
        buf.write("kernel,dense_mults,dense_adds,custom_mults,custom_adds,iter_reduction_pct\n")
        for r in self.rows:
            buf.write(f"{r.kernel},{r.dense_mults},{r.dense_adds},"
                      f"{r.custom_mults},{r.custom_adds},{r.iter_reduction_pct:.4f}\n")
        return buf.getvalue()


def reduction_report(graph: GraphConfig, d_e: int) -> ReductionSummary:
    """Dense vs structured counts for the three matrix units.

    Dense counts use the one-accumulate-per-product convention
    (adds == mults == rows * inner * cols). A dense unit is a standalone
    pass over all n_e edge columns, so its pipeline trip count is
    n_o * (n_o - 1); the structured form folds into the shared node loop
    and needs only n_o - 1 trips per node, an iteration reduction of
    1 - 1/n_o for every unit.
    """
    if d_e < 1:
        raise ValueError(f"d_e must be positive, got {d_e}")
    n_o, n_e, p = graph.n_o, graph.n_e, graph.p
    iter_red = 100.0 * (1.0 - 1.0 / n_o)
    rows = (
        KernelReduction("mmm1", p * n_o * n_e, p * n_o * n_e, 0, 0, iter_red),
        KernelReduction("mmm2", p * n_o * n_e, p * n_o * n_e, 0, 0, iter_red),
        KernelReduction("mmm3", d_e * n_o * n_e, d_e * n_o * n_e, 0, d_e * n_e, iter_red),
    )
    return ReductionSummary(graph, d_e, rows)
