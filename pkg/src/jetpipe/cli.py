"""Command-line front end.

Subcommands: infer, estimate, simulate, dse, reduce-report,
quantize-sweep, selftest. Inputs are JSON, tabular outputs are CSV,
and identical invocations produce byte-identical data outputs (no
timestamps). Files are written atomically (temp + rename). Relative
output paths resolve against $JETPIPE_OUTPUT_DIR when it is set.

Exit codes: 0 success, 2 unparseable inputs/flags, 3 infeasible
constraints, 4 numeric errors. Failures print a one-line JSON object
to stderr: {"error": ..., "exit_code": ...}.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from dataclasses import dataclass

import numpy as np

from .colmatrix import ColMatrix
from .dse import (
    CsvAccuracyOracle,
    DseConstraints,
    SearchSpace,
    SyntheticAccuracyOracle,
    enumerate_designs,
    pareto_front,
    points_to_csv,
    select,
)
from .fixedpoint import Q16_16, FixedSpec
from .graphs import GraphConfig, make_adjacency, materialize_rr, materialize_rs
from .hwmodel import (
    DEFAULT_DEPTHS,
    HwBudget,
    InfeasibleError,
    ParallelismConfig,
    dsp_estimate,
    latency_estimate,
)
from .inference import Model, build_model, forward, quantization_sweep
from .kernels import OpCounter, aggregate_outer, dense_mmm, gather_b1_b2, reduction_report
from .mlp import load_model_description, load_weights
from .pipesim import MODES, build_arch, compare_architectures, fsm_schedule, simulate
from .synth import load_samples, synthetic_inputs, synthetic_model


class ParseFailure(ValueError):
    """Inputs that fail to load or validate before execution starts."""


def _out_path(path: str | None) -> str | None:
    if path is None:
        return None
    base = os.environ.get("JETPIPE_OUTPUT_DIR")
    if base and not os.path.isabs(path):
        return os.path.join(base, path)
    return path


def _write_atomic(path: str, text: str) -> None:
    tmp = path + ".tmp"
    with open(tmp, "w") as f:
        f.write(text)
    os.replace(tmp, path)


def _emit(text: str, out: str | None) -> None:
    path = _out_path(out)
    if path is None:
        sys.stdout.write(text)
    else:
        _write_atomic(path, text)


def _parse_spec(text: str) -> FixedSpec:
    try:
        return FixedSpec.parse(text)
    except ValueError as e:
        raise ParseFailure(str(e)) from e


def _require_files(*paths: str) -> None:
    for p in paths:
        if not os.path.exists(p):
            raise ParseFailure(f"input file not found: {p}")


@dataclass
class LoadedModel:
    model: Model


def _load_model(args) -> LoadedModel:
    _require_files(args.model, args.weights)
    try:
        graph, specs = load_model_description(args.model)
        params = load_weights(args.weights, specs)
    except (ValueError, KeyError, json.JSONDecodeError) as e:
        raise ParseFailure(f"bad model/weights file: {e}") from e
    datapath = _parse_spec(args.fixed) if getattr(args, "fixed", None) else None
    acc = _parse_spec(args.acc) if getattr(args, "acc", None) else Q16_16
    return LoadedModel(build_model(graph, specs, params, datapath=datapath, accumulator=acc))


def cmd_infer(args) -> int:
    loaded = _load_model(args)
    _require_files(args.samples)
    try:
        samples = load_samples(args.samples, loaded.model.graph)
    except (ValueError, KeyError, json.JSONDecodeError) as e:
        raise ParseFailure(f"bad samples file: {e}") from e
    lines = ["sample_id,argmax,p0,p1,p2,p3,p4"]
    for k, (i_mat, _label) in enumerate(samples):
        pred = forward(loaded.model, i_mat)
        probs = ",".join(f"{p:.6f}" for p in pred.probabilities)
        lines.append(f"{k},{pred.argmax},{probs}")
    _emit("\n".join(lines) + "\n", args.output)
    return 0


def _parallelism(args) -> ParallelismConfig:
    return ParallelismConfig(n_fr=args.n_fr, r_fo=args.r_fo, r_phio=args.r_phio,
                             ii_mult=args.ii_mult)


def cmd_estimate(args) -> int:
    graph = GraphConfig(n_o=args.n_o, p=args.p)
    par = _parallelism(args)
    budget = HwBudget(dsp_total=args.dsp_total, clock_mhz=args.clock)
    lat = latency_estimate(graph, par, depths=(args.dp_loop, args.dp_tail), budget=budget)
    dsp = ""
    if args.model:
        _require_files(args.model)
        try:
            mgraph, specs = load_model_description(args.model)
        except (ValueError, KeyError, json.JSONDecodeError) as e:
            raise ParseFailure(f"bad model file: {e}") from e
        if mgraph.n_o != graph.n_o:
            raise ParseFailure(f"model n_o={mgraph.n_o} does not match --n-o {graph.n_o}")
        dsp = str(dsp_estimate(specs, par, budget).dsp_model)
    config = f"nfr{par.n_fr}_rfo{par.r_fo}_rphio{par.r_phio}"
    lines = [
        "config,dsp,ii_cycles,ii_us,latency_cycles,latency_us",
        f"{config},{dsp},{lat.ii_model},{lat.ii_us:.6f},{lat.latency},{lat.latency_us:.6f}",
    ]
    _emit("\n".join(lines) + "\n", args.output)
    return 0


def cmd_simulate(args) -> int:
    graph = GraphConfig(n_o=args.n_o, p=args.p)
    par = _parallelism(args)
    depths = (args.dp_loop, args.dp_tail)
    if args.mode == "all":
        report = compare_architectures(graph, par, depths=depths,
                                       handshake=args.handshake, clock_mhz=args.clock)
        lines = ["mode,ii_cycles,ii_us,latency_cycles,latency_us"]
        for r in report.rows:
            lines.append(f"{r.mode},{r.measured_ii},{r.ii_us:.6f},"
                         f"{r.measured_latency},{r.latency_us:.6f}")
        _emit("\n".join(lines) + "\n", args.output)
        return 0
    arch = build_arch(args.mode, graph, par, depths=depths, handshake=args.handshake)
    res = simulate(arch, graph, par)
    lines = [
        "mode,ii_cycles,ii_us,latency_cycles,latency_us",
        f"{args.mode},{res.measured_ii},{res.measured_ii / args.clock:.6f},"
        f"{res.measured_latency},{res.measured_latency / args.clock:.6f}",
    ]
    _emit("\n".join(lines) + "\n", args.output)
    if args.timeline:
        tl = ["cycle,stage,event"]
        tl += [f"{ev.cycle},{ev.stage},{ev.event}" for ev in res.timeline]
        _write_atomic(_out_path(args.timeline), "\n".join(tl) + "\n")
    return 0


def cmd_reduce_report(args) -> int:
    graph = GraphConfig(n_o=args.n_o, p=args.p)
    summary = reduction_report(graph, args.d_e)
    _emit(summary.to_csv(), args.output)
    return 0


def cmd_quantize_sweep(args) -> int:
    loaded = _load_model(args)
    _require_files(args.samples)
    try:
        samples = load_samples(args.samples, loaded.model.graph)
    except (ValueError, KeyError, json.JSONDecodeError) as e:
        raise ParseFailure(f"bad samples file: {e}") from e
    specs = [_parse_spec(s) for s in args.specs.split(",") if s]
    if not specs:
        raise ParseFailure("no fixed-point formats given")
    rows = quantization_sweep(loaded.model, samples, specs,
                              accumulator=_parse_spec(args.acc))
    lines = ["spec,agreement,n_samples"]
    lines += [f"{r.spec},{r.agreement:.6f},{r.n_samples}" for r in rows]
    _emit("\n".join(lines) + "\n", args.output)
    return 0


def cmd_dse(args) -> int:
    _require_files(args.space)
    try:
        with open(args.space) as f:
            doc = json.load(f)
        space = SearchSpace(
            fr_layer_counts=tuple(doc["fr_layer_counts"]),
            fr_layer_sizes=tuple(doc["fr_layer_sizes"]),
            head_first_sizes=tuple(doc["head_first_sizes"]),
            d_e=int(doc.get("d_e", 8)),
            fo_tail=tuple(doc.get("fo_tail", (32, 16))),
            phio_tail=tuple(doc.get("phio_tail", (16, 5))),
        )
    except (ValueError, KeyError, TypeError, json.JSONDecodeError) as e:
        raise ParseFailure(f"bad search-space file: {e}") from e
    graph = GraphConfig(n_o=args.n_o, p=args.p)
    constraints = DseConstraints(latn_r=args.latn_r, alpha=args.alpha,
                                 budget=HwBudget(args.dsp, args.clock),
                                 objective=args.objective)
    if args.oracle == "synthetic":
        oracle = SyntheticAccuracyOracle()
    elif args.oracle.startswith("csv:"):
        path = args.oracle[4:]
        _require_files(path)
        oracle = CsvAccuracyOracle(path)
    else:
        raise ParseFailure(f"unknown oracle {args.oracle!r}; use 'synthetic' or 'csv:PATH'")
    points = enumerate_designs(space, graph, constraints)
    chosen = select(points, constraints, oracle)
    front = pareto_front(points)
    _emit(points_to_csv(points), args.output)
    selected = {
        "candidate_id": chosen.candidate_id,
        "config": chosen.config_label(),
        "objective": constraints.objective,
        "dsp": chosen.resources.dsp_model,
        "ii_us": round(chosen.latency.ii_us, 6),
        "latency_us": round(chosen.latency.latency_us, 6),
        "accuracy": round(chosen.accuracy, 6),
        "pareto_front": [p.candidate_id for p in front],
    }
    text = json.dumps(selected, indent=1, sort_keys=True) + "\n"
    if args.selected:
        _write_atomic(_out_path(args.selected), text)
    else:
        sys.stdout.write(text)
    return 0


def cmd_selftest(args) -> int:
    """Randomized dense-oracle equivalence and schedule-coverage checks."""
    rng = np.random.default_rng(args.seed)
    for _ in range(20):
        n_o = int(rng.integers(2, 12))
        p = int(rng.integers(1, 6))
        d_e = int(rng.integers(1, 6))
        graph = GraphConfig(n_o=n_o, p=p)
        adj = make_adjacency(graph)
        i_mat = ColMatrix.from_dense(rng.uniform(-1, 1, size=(p, n_o)))
        rr, rs = materialize_rr(adj), materialize_rs(adj)
        b1, b2 = gather_b1_b2(i_mat, adj)
        if not np.allclose(b1.to_dense(), dense_mmm(i_mat, rr).to_dense(), rtol=0, atol=0):
            raise AssertionError("gather B1 mismatch vs dense oracle")
        if not np.allclose(b2.to_dense(), dense_mmm(i_mat, rs).to_dense(), rtol=0, atol=0):
            raise AssertionError("gather B2 mismatch vs dense oracle")
        e_mat = ColMatrix.from_dense(rng.uniform(-1, 1, size=(d_e, graph.n_e)))
        counter = OpCounter()
        got = aggregate_outer(e_mat, adj, counter=counter)
        want = dense_mmm(e_mat, rr.transpose())
        if not np.allclose(got.to_dense(), want.to_dense(), rtol=1e-12, atol=1e-12):
            raise AssertionError("aggregation mismatch vs dense oracle")
        if counter.multiplications != 0 or counter.additions != d_e * graph.n_e:
            raise AssertionError("aggregation op counts off")
        n_a = int(rng.integers(1, n_o))
        sched = fsm_schedule(n_o, n_a)
        for node in range(n_o):
            seen = [j for s in sched.slots if s.node == node for j in s.a_indices]
            if sorted(seen) != list(range(n_o - 1)):
                raise AssertionError("FSM schedule does not cover inner iterations exactly once")
    sys.stdout.write("selftest ok\n")
    return 0


def _add_parallelism_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--n-fr", type=int, default=1, help="edge-MLP instance count")
    p.add_argument("--r-fo", type=int, default=1, help="node-MLP reuse factor")
    p.add_argument("--r-phio", type=int, default=1, help="head reuse factor")
    p.add_argument("--ii-mult", type=int, default=1, help="multiplier initiation interval")


def _add_depth_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--dp-loop", type=int, default=DEFAULT_DEPTHS[0],
                   help="fused-loop pipeline depth, cycles")
    p.add_argument("--dp-tail", type=int, default=DEFAULT_DEPTHS[1],
                   help="post-loop logic depth, cycles")


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="jetpipe",
                                 description="interaction-network inference, hardware "
                                             "models, pipeline simulation and co-design search")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("infer", help="classify samples with a model")
    p.add_argument("--model", required=True)
    p.add_argument("--weights", required=True)
    p.add_argument("--samples", required=True)
    p.add_argument("--fixed", help="datapath format, e.g. Q12.12 (default: real arithmetic)")
    p.add_argument("--acc", default="Q16.16", help="accumulator format")
    p.add_argument("-o", "--output", help="predictions CSV (default: stdout)")
    p.set_defaults(func=cmd_infer)

    p = sub.add_parser("estimate", help="analytical DSP/II/latency estimate")
    p.add_argument("--n-o", type=int, required=True)
    p.add_argument("--p", type=int, default=16)
    p.add_argument("--model", help="model JSON for the DSP column")
    _add_parallelism_flags(p)
    _add_depth_flags(p)
    p.add_argument("--clock", type=float, default=200.0, help="clock, MHz")
    p.add_argument("--dsp-total", type=int, default=12288)
    p.add_argument("-o", "--output", help="CSV output (default: stdout)")
    p.set_defaults(func=cmd_estimate)

    p = sub.add_parser("simulate", help="cycle-level pipeline simulation")
    p.add_argument("--n-o", type=int, required=True)
    p.add_argument("--p", type=int, default=16)
    p.add_argument("--mode", choices=MODES + ("all",), default="all")
    _add_parallelism_flags(p)
    _add_depth_flags(p)
    p.add_argument("--handshake", type=int, default=2, help="cycles per coarse stage boundary")
    p.add_argument("--clock", type=float, default=200.0)
    p.add_argument("--timeline", help="write (cycle,stage,event) CSV here")
    p.add_argument("-o", "--output", help="CSV output (default: stdout)")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("reduce-report", help="dense vs structured operation counts")
    p.add_argument("--n-o", type=int, required=True)
    p.add_argument("--d-e", type=int, required=True)
    p.add_argument("--p", type=int, default=16)
    p.add_argument("-o", "--output", help="CSV output (default: stdout)")
    p.set_defaults(func=cmd_reduce_report)

    p = sub.add_parser("quantize-sweep", help="argmax agreement per fixed-point format")
    p.add_argument("--model", required=True)
    p.add_argument("--weights", required=True)
    p.add_argument("--samples", required=True)
    p.add_argument("--specs", required=True, help="comma list, e.g. Q8.8,Q10.10,Q12.12")
    p.add_argument("--acc", default="Q16.16")
    p.add_argument("-o", "--output", help="CSV output (default: stdout)")
    p.set_defaults(func=cmd_quantize_sweep)

    p = sub.add_parser("dse", help="co-design search over network and parallelism")
    p.add_argument("--space", required=True, help="search-space JSON")
    p.add_argument("--n-o", type=int, required=True)
    p.add_argument("--p", type=int, default=16)
    p.add_argument("--latn-r", type=float, required=True, help="required latency, us")
    p.add_argument("--alpha", type=float, default=2.0, help="latency threshold multiplier")
    p.add_argument("--dsp", type=int, required=True, help="DSP budget")
    p.add_argument("--clock", type=float, default=200.0)
    p.add_argument("--objective", choices=("opt-latn", "opt-acc"), default="opt-latn")
    p.add_argument("--oracle", default="synthetic", help="'synthetic' or 'csv:PATH'")
    p.add_argument("-o", "--output", help="all-candidates CSV (default: stdout)")
    p.add_argument("--selected", help="selected-design JSON (default: stdout)")
    p.set_defaults(func=cmd_dse)

    p = sub.add_parser("selftest", help="randomized kernel/schedule consistency checks")
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_selftest)

    return ap


def _fail(exc: Exception, code: int) -> int:
    sys.stderr.write(json.dumps({"error": str(exc), "exit_code": code}) + "\n")
    return code


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except ParseFailure as e:
        return _fail(e, 2)
    except InfeasibleError as e:
        return _fail(e, 3)
    except (ValueError, ArithmeticError, AssertionError, KeyError) as e:
        return _fail(e, 4)


if __name__ == "__main__":
    sys.exit(main())
