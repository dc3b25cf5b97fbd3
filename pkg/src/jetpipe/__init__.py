"""Toolkit for low-latency interaction-network inference on dataflow hardware.

The pieces, bottom to top:

* ``colmatrix`` / ``fixedpoint``  column-major containers, Q-format math
* ``graphs``                      structured adjacency of the fully
                                  connected particle graph
* ``kernels``                     gather/block-sum matrix kernels with
                                  dense oracles and operation counters
* ``mlp`` / ``inference``         the three-MLP classifier, real and
                                  fixed-point forward pass
* ``hwmodel``                     analytical DSP and II/latency models
* ``pipesim``                     cycle-level simulation of coarse,
                                  partially fused and fully fused pipelines
* ``dse``                         co-design search with pluggable
                                  accuracy oracles
* ``cli``                         batch front end over all of the above
"""

from .colmatrix import ColMatrix, quantize_matrix
from .fixedpoint import (
    Q12_12,
    Q16_16,
    FixedSpec,
    FixedVal,
    downcast,
    fx_acc,
    fx_mul,
    quantize,
)
from .graphs import AdjacencyStructure, GraphConfig, make_adjacency, materialize_rr, materialize_rs
from .hwmodel import (
    HwBudget,
    InfeasibleError,
    LatencyEstimate,
    ParallelismConfig,
    ResourceEstimate,
    dsp_estimate,
    ii_balance,
    latency_estimate,
)
from .inference import Model, Prediction, build_model, forward, mlp_forward, quantization_sweep
from .kernels import (
    OpCounter,
    ReductionSummary,
    aggregate_outer,
    concat_cols,
    dense_mmm,
    gather_b1_b2,
    reduction_report,
)
from .mlp import MLPSpec, ModelParams, make_specs, random_params
from .pipesim import (
    FsmSchedule,
    PipelineArch,
    SimResult,
    TaskSpec,
    build_arch,
    compare_architectures,
    fsm_schedule,
    simulate,
)
from .dse import (
    AccuracyOracle,
    CsvAccuracyOracle,
    DesignPoint,
    DseConstraints,
    SearchSpace,
    SyntheticAccuracyOracle,
    enumerate_designs,
    pareto_front,
    rebalance_hint,
    select,
)

__version__ = "0.1.0"
