"""MLP shapes, parameters and the model/weights file formats.

The network has three MLPs:

* ``f_R``   edge function, input 2*p (sender+receiver features), output d_e
* ``f_O``   node function, input p + d_e (shortcut concat), output d_o
* ``phi_O`` graph head, input d_o, output 5 class logits

Hidden layers use ReLU; outputs are linear (the head gets a softmax at
prediction time, outside the MLP itself).

File formats (JSON):

* model description: ``{"n_o": int, "p": int, "mlps": [{"name": str,
  "layer_sizes": [int, ...], "activations": [str, ...]}, ...]}``
* weights: ``{"<mlp name>": [{"W": [[...out x in...]], "b": [...]}, ...]}``
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from .colmatrix import ColMatrix
from .graphs import GraphConfig

MLP_NAMES = ("f_R", "f_O", "phi_O")
ACTIVATIONS = ("relu", "linear")
NUM_CLASSES = 5


@dataclass(frozen=True)
class MLPSpec:
    """Shape of one MLP: input size plus per-layer output sizes and activations."""

    name: str
    input_size: int
    layer_sizes: tuple[int, ...]
    activations: tuple[str, ...]

    def __post_init__(self):
        if self.name not in MLP_NAMES:
            raise ValueError(f"unknown MLP name {self.name!r}; expected one of {MLP_NAMES}")
        if self.input_size < 1 or not self.layer_sizes:
            raise ValueError(f"{self.name}: empty shape")
        if any(s < 1 for s in self.layer_sizes):
            raise ValueError(f"{self.name}: non-positive layer size")
        if len(self.activations) != len(self.layer_sizes):
            raise ValueError(f"{self.name}: {len(self.activations)} activations for "
                             f"{len(self.layer_sizes)} layers")
        for a in self.activations:
            if a not in ACTIVATIONS:
                raise ValueError(f"{self.name}: unknown activation {a!r}")

    @property
    def output_size(self) -> int:
        return self.layer_sizes[-1]

    @property
    def num_layers(self) -> int:
        return len(self.layer_sizes)

    def layer_dims(self) -> list[tuple[int, int]]:
        """(in, out) per layer."""
        ins = (self.input_size,) + self.layer_sizes[:-1]
        return list(zip(ins, self.layer_sizes))


def default_activations(n_layers: int) -> tuple[str, ...]:
    """ReLU on hidden layers, linear output."""
    return ("relu",) * (n_layers - 1) + ("linear",)


def make_specs(graph: GraphConfig,
               f_r_sizes, f_o_sizes, phi_o_sizes,
               activations: dict[str, tuple[str, ...]] | None = None) -> dict[str, MLPSpec]:
    """Build the three specs with the input-size chain enforced."""
    f_r_sizes = tuple(f_r_sizes)
    f_o_sizes = tuple(f_o_sizes)
    phi_o_sizes = tuple(phi_o_sizes)
    acts = activations or {}

    def act(name, n):
        return tuple(acts.get(name, default_activations(n)))

    d_e = f_r_sizes[-1]
    d_o = f_o_sizes[-1]
    specs = {
        "f_R": MLPSpec("f_R", 2 * graph.p, f_r_sizes, act("f_R", len(f_r_sizes))),
        "f_O": MLPSpec("f_O", graph.p + d_e, f_o_sizes, act("f_O", len(f_o_sizes))),
        "phi_O": MLPSpec("phi_O", d_o, phi_o_sizes, act("phi_O", len(phi_o_sizes))),
    }
    validate_spec_chain(graph, specs)
    return specs


def validate_spec_chain(graph: GraphConfig, specs: dict[str, MLPSpec]) -> None:
    for name in MLP_NAMES:
        if name not in specs:
            raise ValueError(f"missing MLP spec {name!r}")
    f_r, f_o, phi_o = specs["f_R"], specs["f_O"], specs["phi_O"]
    if f_r.input_size != 2 * graph.p:
        raise ValueError(f"f_R input {f_r.input_size} != 2*p = {2 * graph.p}")
    if f_o.input_size != graph.p + f_r.output_size:
        raise ValueError(f"f_O input {f_o.input_size} != p + d_e = {graph.p + f_r.output_size}")
    if phi_o.input_size != f_o.output_size:
        raise ValueError(f"phi_O input {phi_o.input_size} != d_o = {f_o.output_size}")
    if phi_o.output_size != NUM_CLASSES:
        raise ValueError(f"phi_O output {phi_o.output_size} != {NUM_CLASSES} classes")


@dataclass
class ModelParams:
    """Per-MLP ordered (weights, bias) pairs, real-valued.

    Weights are ColMatrix[out x in]; column k holds input k's fan-out,
    which is the access pattern the fixed-point forward pass wants.
    """

    layers: dict[str, list[tuple[ColMatrix, np.ndarray]]]

    def validate(self, specs: dict[str, MLPSpec]) -> None:
        for name, spec in specs.items():
            got = self.layers.get(name)
            if got is None:
                raise ValueError(f"missing weights for {name}")
            if len(got) != spec.num_layers:
                raise ValueError(f"{name}: {len(got)} weight layers for {spec.num_layers} spec layers")
            for li, ((n_in, n_out), (w, b)) in enumerate(zip(spec.layer_dims(), got)):
                if w.shape != (n_out, n_in):
                    raise ValueError(f"{name} layer {li}: weight shape {w.shape} != {(n_out, n_in)}")
                if b.shape != (n_out,):
                    raise ValueError(f"{name} layer {li}: bias shape {b.shape} != {(n_out,)}")

    def parameter_count(self) -> int:
        return sum(w.rows * w.cols + b.size
                   for lst in self.layers.values() for (w, b) in lst)


def random_params(specs: dict[str, MLPSpec], rng: np.random.Generator,
                  scale: float = 0.5) -> ModelParams:
    """Uniform(-scale, scale) weights and biases; deterministic per rng state."""
    layers: dict[str, list[tuple[ColMatrix, np.ndarray]]] = {}
    for name in MLP_NAMES:
        spec = specs[name]
        lst = []
        for (n_in, n_out) in spec.layer_dims():
            w = ColMatrix.from_dense(rng.uniform(-scale, scale, size=(n_out, n_in)))
            b = rng.uniform(-scale, scale, size=n_out)
            lst.append((w, b))
        layers[name] = lst
    return ModelParams(layers)


def load_model_description(path) -> tuple[GraphConfig, dict[str, MLPSpec]]:
    with open(path) as f:
        doc = json.load(f)
    try:
        graph = GraphConfig(n_o=int(doc["n_o"]), p=int(doc["p"]))
        by_name = {m["name"]: m for m in doc["mlps"]}
        sizes = {}
        acts = {}
        for name in MLP_NAMES:
            m = by_name[name]
            sizes[name] = tuple(int(s) for s in m["layer_sizes"])
            if "activations" in m:
                acts[name] = tuple(m["activations"])
    except KeyError as e:
        raise ValueError(f"model description missing field {e}") from e
    return graph, make_specs(graph, sizes["f_R"], sizes["f_O"], sizes["phi_O"], acts or None)


def save_model_description(path, graph: GraphConfig, specs: dict[str, MLPSpec]) -> None:
    doc = {
        "n_o": graph.n_o,
        "p": graph.p,
        "mlps": [
            {"name": n, "layer_sizes": list(specs[n].layer_sizes),
             "activations": list(specs[n].activations)}
            for n in MLP_NAMES
        ],
    }
    with open(path, "w") as f:
        json.dump(doc, f, indent=1, sort_keys=True)
        f.write("\n")


def load_weights(path, specs: dict[str, MLPSpec]) -> ModelParams:
    with open(path) as f:
        doc = json.load(f)
    layers: dict[str, list[tuple[ColMatrix, np.ndarray]]] = {}
    for name in MLP_NAMES:
        if name not in doc:
            raise ValueError(f"weights file missing MLP {name!r}")
        lst = []
        for li, layer in enumerate(doc[name]):
            try:
                w = ColMatrix.from_dense(np.asarray(layer["W"], dtype=np.float64))
                b = np.asarray(layer["b"], dtype=np.float64)
            except KeyError as e:
                raise ValueError(f"{name} layer {li} missing field {e}") from e
            lst.append((w, b))
        layers[name] = lst
    params = ModelParams(layers)
    params.validate(specs)
    return params


def save_weights(path, params: ModelParams) -> None:
    doc = {
        name: [{"W": w.to_dense().tolist(), "b": b.tolist()} for (w, b) in lst]
        for name, lst in params.layers.items()
    }
    with open(path, "w") as f:
        json.dump(doc, f, sort_keys=True)
        f.write("\n")
