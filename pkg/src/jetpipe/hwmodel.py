"""Analytical DSP and initiation-interval/latency models.

Only the three MLPs multiply, so DSP demand is per fully connected
layer: in * out multipliers divided by the layer's reuse factor (one
multiplier per DSP at the 24-bit datapath width), rounded up because a
fractional DSP cannot exist. The edge MLP is replicated n_fr times; the
node MLP and head get one instance each.

Timing of the fully fused design: the loop iterates once per node, the
per-iteration interval is

    ii_loop = ii_mult * max(ceil((n_o - 1) / n_fr), r_fo, r_phio)

a new graph is accepted every ii_loop * n_o cycles, and end-to-end
latency is ii_loop * (n_o - 1) plus two pipeline-depth constants:
dp_loop (the fused loop body) and dp_tail (the logic after the loop).
The depth constants are architecture calibration inputs; the defaults
(30, 7) make the model reproduce a 124-cycle / 0.62 us reference design
at 200 MHz whose interval is 90 cycles / 0.45 us.

The edge MLP's own reuse factor is pinned to 1: its execution is the
design bottleneck, so it is never serialized.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .graphs import GraphConfig
from .mlp import MLPSpec

DEFAULT_DEPTHS = (30, 7)


class InfeasibleError(ValueError):
    """No configuration satisfies the stated budget/constraints."""


@dataclass(frozen=True)
class ParallelismConfig:
    """Hardware knobs: edge-MLP instance count and per-MLP reuse factors."""

    n_fr: int = 1
    r_fr: int = 1
    r_fo: int = 1
    r_phio: int = 1
    ii_mult: int = 1

    def __post_init__(self):
        for name in ("n_fr", "r_fr", "r_fo", "r_phio", "ii_mult"):
            if getattr(self, name) < 1:
                raise ValueError(f"{name} must be >= 1")
        if self.r_fr != 1:
            raise ValueError("the edge MLP reuse factor is fixed at 1")


@dataclass(frozen=True)
class HwBudget:
    dsp_total: int
    clock_mhz: float

    def __post_init__(self):
        if self.dsp_total <= 0 or self.clock_mhz <= 0:
            raise ValueError("budget fields must be positive")

    def cycles_to_us(self, cycles: int) -> float:
        return cycles / self.clock_mhz


@dataclass(frozen=True)
class ResourceEstimate:
    per_layer: dict[str, tuple[int, ...]]  # DSPs per layer, per MLP
    per_mlp: dict[str, int]                # one instance each
    instances: dict[str, int]
    dsp_model: int
    dsp_total: int

    @property
    def feasible(self) -> bool:
        return self.dsp_model <= self.dsp_total


@dataclass(frozen=True)
class LatencyEstimate:
    ii_loop: int
    ii_model: int
    latency: int
    ii_us: float
    latency_us: float
    dp_loop: int
    dp_tail: int


def _reuse_for(name: str, par: ParallelismConfig) -> int:
    return {"f_R": par.r_fr, "f_O": par.r_fo, "phi_O": par.r_phio}[name]


def dsp_estimate(specs: dict[str, MLPSpec], par: ParallelismConfig,
                 budget: HwBudget) -> ResourceEstimate:
    """DSP count per layer/MLP and total against the budget."""
    per_layer = {}
    per_mlp = {}
    for name, spec in specs.items():
        r = _reuse_for(name, par)
        counts = tuple(math.ceil(n_in * n_out / r) for (n_in, n_out) in spec.layer_dims())
        per_layer[name] = counts
        per_mlp[name] = sum(counts)
    instances = {"f_R": par.n_fr, "f_O": 1, "phi_O": 1}
    total = sum(per_mlp[n] * instances[n] for n in per_mlp)
    return ResourceEstimate(per_layer=per_layer, per_mlp=per_mlp, instances=instances,
                            dsp_model=total, dsp_total=budget.dsp_total)


def loop_interval(graph: GraphConfig, par: ParallelismConfig) -> int:
    """Per-node-iteration interval of the fused loop, in cycles."""
    edge_term = math.ceil((graph.n_o - 1) / par.n_fr)
    return par.ii_mult * max(edge_term, par.r_fo, par.r_phio)


def latency_estimate(graph: GraphConfig, par: ParallelismConfig,
                     depths: tuple[int, int] = DEFAULT_DEPTHS,
                     budget: HwBudget | None = None) -> LatencyEstimate:
    dp_loop, dp_tail = depths
    if dp_loop < 0 or dp_tail < 0:
        raise ValueError("pipeline depths must be nonnegative")
    ii_loop = loop_interval(graph, par)
    ii_model = ii_loop * graph.n_o
    latency = ii_loop * (graph.n_o - 1) + dp_loop + dp_tail
    clock = budget.clock_mhz if budget else 200.0
    return LatencyEstimate(ii_loop=ii_loop, ii_model=ii_model, latency=latency,
                           ii_us=ii_model / clock, latency_us=latency / clock,
                           dp_loop=dp_loop, dp_tail=dp_tail)


def ii_balance(specs: dict[str, MLPSpec], graph: GraphConfig, budget: HwBudget,
               ii_mult: int = 1) -> ParallelismConfig:
    """Cheapest parallelism that minimizes the model interval on the budget.

    For a target per-iteration interval T, the least hardware that still
    meets T is n_fr = ceil((n_o - 1) / T) with both reuse factors raised
    to T (serializing the non-bottleneck MLPs frees DSPs for edge-MLP
    copies). Candidates are scanned in increasing T: the first feasible
    one has the minimum interval; ties inside a T are broken by fewer
    DSPs and then by smaller n_fr.
    """
    max_serial = max(n_in * n_out for name in ("f_O", "phi_O")
                     for (n_in, n_out) in specs[name].layer_dims())
    t_max = max(graph.n_o - 1, max_serial)
    for t in range(1, t_max + 1):
        # minimum hardware for an interval <= t: just enough edge-MLP
        # copies, everything else serialized all the way to t
        par = ParallelismConfig(n_fr=math.ceil((graph.n_o - 1) / t),
                                r_fo=t, r_phio=t, ii_mult=ii_mult)
        if dsp_estimate(specs, par, budget).feasible:
            return par
    raise InfeasibleError(
        f"no parallelism fits within dsp_total={budget.dsp_total}: even a fully "
        f"serialized design needs more DSPs than the budget provides")
