"""Joint search over network shape and hardware parallelism.

Candidates vary the edge MLP's depth and width (it runs n_o * (n_o - 1)
times per inference, so shrinking it first buys the most speed) and the
first-layer width of the node MLP and head (which run n_o times and
once). Every candidate gets the cheapest interval-optimal parallelism,
the DSP estimate and the latency estimate; candidates over the latency
threshold alpha * latn_r or over the DSP budget are pruned with a
reason and never reach the accuracy oracle.

Accuracy is always an injected oracle: a CSV of externally measured
accuracies keyed by candidate id, or the synthetic surrogate used by
tests (monotone in parameter count with diminishing returns, clearly
not physics). Training happens elsewhere, by design.

Selection objectives:

* ``opt-latn`` minimum latency; ties by higher accuracy, then fewer
  DSPs, then candidate id.
* ``opt-acc``  maximum accuracy among points with latency <= latn_r;
  ties by lower latency, then fewer DSPs, then candidate id.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field

from .graphs import GraphConfig
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
from .mlp import MLPSpec, make_specs


@dataclass(frozen=True)
class SearchSpace:
    """Grid of network/hardware knobs explored by the search."""

    fr_layer_counts: tuple[int, ...]
    fr_layer_sizes: tuple[int, ...]
    head_first_sizes: tuple[int, ...]
    d_e: int = 8
    fo_tail: tuple[int, ...] = (32, 16)    # node MLP after its first layer; last is d_o
    phio_tail: tuple[int, ...] = (16, 5)   # head after its first layer; last is the class count
    ii_mult: int = 1

    def __post_init__(self):
        if not (self.fr_layer_counts and self.fr_layer_sizes and self.head_first_sizes):
            raise ValueError("all search sets must be nonempty")
        if self.phio_tail[-1] != 5:
            raise ValueError("head must end in 5 classes")

    def size(self) -> int:
        return len(self.fr_layer_counts) * len(self.fr_layer_sizes) * len(self.head_first_sizes)


@dataclass(frozen=True)
class DseConstraints:
    latn_r: float               # required latency, microseconds
    alpha: float                # pruning threshold multiplier
    budget: HwBudget
    objective: str = "opt-latn"

    def __post_init__(self):
        if self.latn_r <= 0:
            raise ValueError("latn_r must be positive")
        if self.alpha < 1:
            raise ValueError("alpha must be >= 1")
        if self.objective not in ("opt-latn", "opt-acc"):
            raise ValueError(f"unknown objective {self.objective!r}")

    @property
    def threshold_us(self) -> float:
        return self.alpha * self.latn_r


@dataclass
class DesignPoint:
    candidate_id: str
    specs: dict[str, MLPSpec]
    par: ParallelismConfig | None
    resources: ResourceEstimate | None
    latency: LatencyEstimate | None
    pruned_reason: str | None = None
    accuracy: float | None = None

    @property
    def pruned(self) -> bool:
        return self.pruned_reason is not None

    def config_label(self) -> str:
        fr = "x".join(str(s) for s in self.specs["f_R"].layer_sizes)
        head = self.specs["f_O"].layer_sizes[0]
        par = f"nfr{self.par.n_fr}_rfo{self.par.r_fo}_rphio{self.par.r_phio}" if self.par else "none"
        return f"fr{fr}_head{head}_{par}"


class AccuracyOracle:
    """Deterministic candidate -> accuracy fraction."""

    def evaluate(self, point: DesignPoint) -> float:
        raise NotImplementedError


class CsvAccuracyOracle(AccuracyOracle):
    """Lookup of externally measured accuracies.

    CSV schema: ``candidate_id,accuracy`` with a header row. Use the
    candidate ids emitted in the search CSV to key measurements.
    """

    def __init__(self, path):
        self.table: dict[str, float] = {}
        with open(path, newline="") as f:
            for row in csv.DictReader(f):
                self.table[row["candidate_id"]] = float(row["accuracy"])

    def evaluate(self, point: DesignPoint) -> float:
        try:
            return self.table[point.candidate_id]
        except KeyError:
            raise KeyError(f"no measured accuracy for candidate {point.candidate_id!r}")


class SyntheticAccuracyOracle(AccuracyOracle):
    """Synthetic surrogate: monotone in parameter count, diminishing returns.

    Stands in for trained-model accuracy in tests and demos only; the
    numbers mean nothing physically.
    """

    def __init__(self, floor: float = 0.60, ceiling: float = 0.85, scale: float = 4000.0):
        self.floor = floor
        self.ceiling = ceiling
        self.scale = scale

    def evaluate(self, point: DesignPoint) -> float:
        n = sum(n_in * n_out + n_out
                for spec in point.specs.values()
                for (n_in, n_out) in spec.layer_dims())
        return self.floor + (self.ceiling - self.floor) * (1.0 - math.exp(-n / self.scale))


def rebalance_hint(graph: GraphConfig) -> tuple[int, int, int]:
    """Per-inference run counts of (edge MLP, node MLP, head).

    The edge MLP runs once per edge, the node MLP once per node, the
    head once; the search shrinks MLPs in that order of leverage.
    """
    return (graph.n_e, graph.n_o, 1)


def _candidates(space: SearchSpace, graph: GraphConfig):
    # smallest edge MLP first: it has the largest iteration multiplicity
    for fr_size in sorted(space.fr_layer_sizes):
        for fr_count in sorted(space.fr_layer_counts):
            for head_size in sorted(space.head_first_sizes):
                fr = (fr_size,) * fr_count + (space.d_e,)
                fo = (head_size,) + space.fo_tail
                phio = (head_size,) + space.phio_tail
                cid = f"fr{fr_size}x{fr_count}_head{head_size}"
                yield cid, make_specs(graph, fr, fo, phio)


def enumerate_designs(space: SearchSpace, graph: GraphConfig,
                      constraints: DseConstraints) -> list[DesignPoint]:
    """Estimate every candidate; mark pruned ones with the binding reason."""
    points = []
    for cid, specs in _candidates(space, graph):
        try:
            par = ii_balance(specs, graph, constraints.budget, ii_mult=space.ii_mult)
        except InfeasibleError as e:
            points.append(DesignPoint(cid, specs, None, None, None,
                                      pruned_reason=f"dsp_budget: {e}"))
            continue
        res = dsp_estimate(specs, par, constraints.budget)
        lat = latency_estimate(graph, par, budget=constraints.budget)
        reason = None
        if not res.feasible:
            reason = f"dsp_budget: {res.dsp_model} > {res.dsp_total}"
        elif lat.latency_us > constraints.threshold_us:
            reason = (f"latency_threshold: {lat.latency_us:.4f}us > "
                      f"alpha*latn_r = {constraints.threshold_us:.4f}us")
        points.append(DesignPoint(cid, specs, par, res, lat, pruned_reason=reason))
    return points


def evaluate_accuracies(points: list[DesignPoint], oracle: AccuracyOracle) -> None:
    """Fill in accuracy for unpruned points only (pruned ones never train)."""
    for p in points:
        if not p.pruned and p.accuracy is None:
            p.accuracy = oracle.evaluate(p)


def select(points: list[DesignPoint], constraints: DseConstraints,
           oracle: AccuracyOracle) -> DesignPoint:
    """Pick the winner under the constraints' objective."""
    evaluate_accuracies(points, oracle)
    live = [p for p in points if not p.pruned]
    if not live:
        raise InfeasibleError("every candidate was pruned: nothing satisfies "
                              "the DSP budget and latency threshold")
    if constraints.objective == "opt-latn":
        return min(live, key=lambda p: (p.latency.latency_us, -p.accuracy,
                                        p.resources.dsp_model, p.candidate_id))
    eligible = [p for p in live if p.latency.latency_us <= constraints.latn_r]
    if not eligible:
        raise InfeasibleError(
            f"no candidate meets latn_r = {constraints.latn_r}us; the latency "
            f"requirement is the binding constraint")
    return min(eligible, key=lambda p: (-p.accuracy, p.latency.latency_us,
                                        p.resources.dsp_model, p.candidate_id))


def pareto_front(points: list[DesignPoint]) -> list[DesignPoint]:
    """Nondominated set under (min latency, max accuracy), ordered by latency.

    Only evaluated, unpruned points participate.
    """
    live = [p for p in points if not p.pruned and p.accuracy is not None]
    live.sort(key=lambda p: (p.latency.latency_us, -p.accuracy, p.candidate_id))
    front: list[DesignPoint] = []
    best_before = -math.inf  # best accuracy at strictly smaller latency
    i = 0
    while i < len(live):
        j = i
        while j < len(live) and live[j].latency.latency_us == live[i].latency.latency_us:
            j += 1
        group_max = max(p.accuracy for p in live[i:j])
        if group_max > best_before:
            front.extend(p for p in live[i:j] if p.accuracy == group_max)
            best_before = group_max
        i = j
    return front


def points_to_csv(points: list[DesignPoint]) -> str:
    """Full search result table, one row per candidate."""
    lines = ["candidate_id,config,dsp,ii_us,latency_us,accuracy,pruned_reason"]
    for p in points:
        dsp = p.resources.dsp_model if p.resources else ""
        ii = f"{p.latency.ii_us:.6f}" if p.latency else ""
        lat = f"{p.latency.latency_us:.6f}" if p.latency else ""
        acc = f"{p.accuracy:.6f}" if p.accuracy is not None else ""
        reason = (p.pruned_reason or "").replace(",", ";")
        lines.append(f"{p.candidate_id},{p.config_label()},{dsp},{ii},{lat},{acc},{reason}")
    return "\n".join(lines) + "\n"
