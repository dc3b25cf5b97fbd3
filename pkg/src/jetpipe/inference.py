"""End-to-end forward pass of the interaction-network classifier.

Pipeline, identical in real and fixed-point mode:

    I -> (B1, B2) gather -> B concat -> f_R per edge column -> E
      -> block-sum aggregation -> concat with I -> f_O per node column
      -> O -> sum over nodes -> phi_O -> 5 class logits -> softmax

Fixed mode quantizes inputs and parameters to the datapath format,
multiplies into the accumulator format, accumulates there (bias first,
then inputs in ascending index), applies ReLU in the accumulator domain
and casts back down after each layer. Softmax stays in real arithmetic:
it never changes the argmax, which is what the decision consumer needs.

Summation orders are fixed (edges ascending within a block, nodes
ascending for the graph reduction), so fixed-point results are
bit-identical across runs.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np

from .colmatrix import ColMatrix, quantize_matrix
from .fixedpoint import (
    Q16_16,
    FixedSpec,
    downcast_array,
    fx_acc_array,
    fx_mul_array,
    quantize_array,
    to_float,
)
from .graphs import AdjacencyStructure, GraphConfig, make_adjacency
from .kernels import aggregate_outer, concat_cols, gather_b1_b2
from .mlp import MLPSpec, ModelParams, validate_spec_chain


@dataclass
class Model:
    """A concrete classifier: graph dims, MLP shapes, parameters, numeric mode.

    ``datapath is None`` means real (float64) arithmetic; otherwise fixed
    point with the given datapath/accumulator formats.
    """

    graph: GraphConfig
    adj: AdjacencyStructure
    specs: dict[str, MLPSpec]
    params: ModelParams
    datapath: FixedSpec | None = None
    accumulator: FixedSpec = Q16_16
    node_reduction: str = "sum"  # "mean" supported but unvalidated against hardware

    def __post_init__(self):
        validate_spec_chain(self.graph, self.specs)
        self.params.validate(self.specs)
        if self.node_reduction not in ("sum", "mean"):
            raise ValueError(f"unknown node reduction {self.node_reduction!r}")

    @property
    def mode(self) -> str:
        return "real" if self.datapath is None else "fixed"

    def as_real(self) -> "Model":
        return replace(self, datapath=None)

    def with_datapath(self, datapath: FixedSpec, accumulator: FixedSpec | None = None) -> "Model":
        return replace(self, datapath=datapath,
                       accumulator=accumulator or self.accumulator)


def build_model(graph: GraphConfig, specs: dict[str, MLPSpec], params: ModelParams,
                datapath: FixedSpec | None = None,
                accumulator: FixedSpec = Q16_16) -> Model:
    return Model(graph, make_adjacency(graph), specs, params,
                 datapath=datapath, accumulator=accumulator)


@dataclass(frozen=True)
class Prediction:
    logits: np.ndarray         # 5 class scores (values, not raws)
    probabilities: np.ndarray  # softmax of logits
    argmax: int


def softmax(logits: np.ndarray) -> np.ndarray:
    z = np.exp(logits - np.max(logits))
    return z / z.sum()


def _mlp_real(layers, activations, x: np.ndarray) -> np.ndarray:
    cur = x
    for (w, b), act in zip(layers, activations):
        cur = w.to_dense() @ cur + b[:, None]
        if act == "relu":
            cur = np.maximum(cur, 0.0)
    return cur


def quantize_params(params: ModelParams, spec: FixedSpec) -> dict[str, list[tuple[np.ndarray, np.ndarray]]]:
    """Datapath raws for every weight matrix and bias vector."""
    out = {}
    for name, lst in params.layers.items():
        out[name] = [(quantize_array(w.to_dense(), spec), quantize_array(b, spec))
                     for (w, b) in lst]
    return out


def _mlp_fixed(qlayers, activations, x_raw: np.ndarray,
               datapath: FixedSpec, accumulator: FixedSpec) -> np.ndarray:
    """Batched fixed-point MLP on (in x ncols) raws; returns datapath raws.

    Accumulation starts from the bias and adds input terms in ascending
    index, matching the kernels' reproducibility convention.
    """
    cur = x_raw
    n_cols = cur.shape[1]
    for (wq, bq), act in zip(qlayers, activations):
        bias_acc = downcast_array(bq, datapath, accumulator)
        acc = np.repeat(bias_acc[:, None], n_cols, axis=1)
        for k in range(cur.shape[0]):
            term = fx_mul_array(wq[:, k:k + 1], datapath, cur[k:k + 1, :], datapath, accumulator)
            acc = fx_acc_array(acc, term, accumulator)
        if act == "relu":
            acc = np.maximum(acc, 0)
        cur = downcast_array(acc, accumulator, datapath)
    return cur


def mlp_forward(spec: MLPSpec, layers, x,
                datapath: FixedSpec | None = None,
                accumulator: FixedSpec = Q16_16) -> np.ndarray:
    """Run one MLP on a single column; returns represented values."""
    x = np.asarray(x, dtype=np.float64)
    if x.shape != (spec.input_size,):
        raise ValueError(f"{spec.name}: input shape {x.shape} != ({spec.input_size},)")
    if datapath is None:
        return _mlp_real(layers, spec.activations, x[:, None])[:, 0]
    qlayers = [(quantize_array(w.to_dense(), datapath), quantize_array(b, datapath))
               for (w, b) in layers]
    raw = _mlp_fixed(qlayers, spec.activations, quantize_array(x, datapath)[:, None],
                     datapath, accumulator)
    return to_float(raw[:, 0], datapath)


def _check_input(model: Model, i_mat: ColMatrix) -> None:
    if i_mat.is_fixed:
        raise ValueError("forward expects real-valued inputs; quantization is internal")
    if i_mat.shape != (model.graph.p, model.graph.n_o):
        raise ValueError(f"input shape {i_mat.shape} != ({model.graph.p}, {model.graph.n_o})")


def _forward_real(model: Model, i_mat: ColMatrix) -> np.ndarray:
    b1, b2 = gather_b1_b2(i_mat, model.adj)
    b = concat_cols(b1, b2)
    e2d = _mlp_real(model.params.layers["f_R"], model.specs["f_R"].activations, b.to_dense())
    e = ColMatrix.from_dense(e2d)
    ebar = aggregate_outer(e, model.adj)
    c = concat_cols(i_mat, ebar)
    o2d = _mlp_real(model.params.layers["f_O"], model.specs["f_O"].activations, c.to_dense())
    s = o2d.sum(axis=1)
    if model.node_reduction == "mean":
        s = s / model.graph.n_o
    return _mlp_real(model.params.layers["phi_O"], model.specs["phi_O"].activations,
                     s[:, None])[:, 0]


def _forward_fixed(model: Model, i_mat: ColMatrix, qparams) -> np.ndarray:
    dp, acc_spec = model.datapath, model.accumulator
    iq = quantize_matrix(i_mat, dp)
    b1, b2 = gather_b1_b2(iq, model.adj)
    b = concat_cols(b1, b2)
    e_raw = _mlp_fixed(qparams["f_R"], model.specs["f_R"].activations, b.to_dense(), dp, acc_spec)
    e = ColMatrix(e_raw.shape[0], e_raw.shape[1], e_raw.flatten(order="F"), dp)
    ebar = aggregate_outer(e, model.adj, acc_spec=acc_spec)
    c = concat_cols(iq, ebar)
    o_raw = _mlp_fixed(qparams["f_O"], model.specs["f_O"].activations, c.to_dense(), dp, acc_spec)
    acc = np.zeros(o_raw.shape[0], dtype=np.int64)
    for node in range(model.graph.n_o):
        acc = fx_acc_array(acc, downcast_array(o_raw[:, node], dp, acc_spec), acc_spec)
    s_raw = downcast_array(acc, acc_spec, dp)
    if model.node_reduction == "mean":
        inv = quantize_array(1.0 / model.graph.n_o, dp)
        s_raw = downcast_array(fx_mul_array(s_raw, dp, inv, dp, acc_spec), acc_spec, dp)
    logits_raw = _mlp_fixed(qparams["phi_O"], model.specs["phi_O"].activations,
                            s_raw[:, None], dp, acc_spec)
    return to_float(logits_raw[:, 0], dp)


def forward(model: Model, i_mat: ColMatrix, _qparams=None) -> Prediction:
    """Classify one graph; returns logits, softmax probabilities and argmax."""
    _check_input(model, i_mat)
    if model.datapath is None:
        logits = _forward_real(model, i_mat)
    else:
        qparams = _qparams or quantize_params(model.params, model.datapath)
        logits = _forward_fixed(model, i_mat, qparams)
    return Prediction(logits=logits, probabilities=softmax(logits),
                      argmax=int(np.argmax(logits)))


@dataclass(frozen=True)
class SweepRow:
    spec: FixedSpec
    agreement: float
    n_samples: int


def quantization_sweep(model: Model, dataset, specs,
                       accumulator: FixedSpec = Q16_16) -> list[SweepRow]:
    """Per-format fraction of samples whose fixed argmax matches real argmax.

    ``dataset`` is a list of (input ColMatrix, label) pairs; labels are
    carried for the caller's bookkeeping and do not enter the agreement.
    """
    dataset = list(dataset)
    if not dataset:
        raise ValueError("empty dataset")
    real_model = model.as_real()
    real_argmax = [forward(real_model, i).argmax for (i, _label) in dataset]
    rows = []
    for spec in specs:
        fixed_model = model.with_datapath(spec, accumulator)
        qparams = quantize_params(model.params, spec)
        hits = sum(1 for (i, _label), ra in zip(dataset, real_argmax)
                   if forward(fixed_model, i, _qparams=qparams).argmax == ra)
        rows.append(SweepRow(spec=spec, agreement=hits / len(dataset), n_samples=len(dataset)))
    return rows
