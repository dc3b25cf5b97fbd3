"""Seeded synthetic models and datasets for demos, self-tests and sweeps.

Nothing here resembles physics data: inputs are uniform noise and the
models are randomly initialized. What the generators do guarantee is
determinism (same seed, same bytes) and value ranges small enough that
the default fixed-point formats do not saturate.
"""

from __future__ import annotations

import json

import numpy as np

from .colmatrix import ColMatrix
from .graphs import GraphConfig
from .inference import Model, build_model
from .mlp import (
    MLPSpec,
    ModelParams,
    make_specs,
    random_params,
    save_model_description,
    save_weights,
)


def synthetic_specs(graph: GraphConfig, d_e: int = 4, d_o: int = 4,
                    hidden: int = 8) -> dict[str, MLPSpec]:
    return make_specs(graph,
                      f_r_sizes=(hidden, d_e),
                      f_o_sizes=(hidden, d_o),
                      phi_o_sizes=(hidden, 5))


def synthetic_model(seed: int = 0, n_o: int = 4, p: int = 3, d_e: int = 4,
                    d_o: int = 4, hidden: int = 8, scale: float = 0.5) -> Model:
    rng = np.random.default_rng(seed)
    graph = GraphConfig(n_o=n_o, p=p)
    specs = synthetic_specs(graph, d_e=d_e, d_o=d_o, hidden=hidden)
    return build_model(graph, specs, random_params(specs, rng, scale=scale))


def synthetic_inputs(graph: GraphConfig, n_samples: int, seed: int = 0,
                     scale: float = 1.0) -> list[tuple[ColMatrix, int]]:
    rng = np.random.default_rng(seed)
    out = []
    for _ in range(n_samples):
        i = ColMatrix.from_dense(rng.uniform(-scale, scale, size=(graph.p, graph.n_o)))
        out.append((i, int(rng.integers(0, 5))))
    return out


def save_samples(path, samples: list[tuple[ColMatrix, int]]) -> None:
    """Sample file: a JSON array of {"i": [columns...], "label": int}."""
    doc = [{"i": [m.col(c).tolist() for c in range(m.cols)], "label": label}
           for (m, label) in samples]
    with open(path, "w") as f:
        json.dump(doc, f)
        f.write("\n")


def load_samples(path, graph: GraphConfig) -> list[tuple[ColMatrix, int]]:
    with open(path) as f:
        doc = json.load(f)
    if isinstance(doc, dict):
        doc = [doc]
    out = []
    for k, entry in enumerate(doc):
        cols = entry["i"]
        if len(cols) != graph.n_o or any(len(c) != graph.p for c in cols):
            raise ValueError(f"sample {k}: expected {graph.n_o} columns of {graph.p} features")
        m = ColMatrix.zeros(graph.p, graph.n_o)
        for c, col in enumerate(cols):
            m.set_col(c, np.asarray(col, dtype=np.float64))
        out.append((m, int(entry.get("label", -1))))
    return out


def write_model_files(outdir, model: Model, n_samples: int = 8, seed: int = 0,
                      prefix: str = "demo") -> dict[str, str]:
    """Write model/weights/samples JSON files; returns their paths."""
    import os
    paths = {
        "model": os.path.join(outdir, f"{prefix}_model.json"),
        "weights": os.path.join(outdir, f"{prefix}_weights.json"),
        "samples": os.path.join(outdir, f"{prefix}_samples.json"),
    }
    save_model_description(paths["model"], model.graph, model.specs)
    save_weights(paths["weights"], model.params)
    save_samples(paths["samples"], synthetic_inputs(model.graph, n_samples, seed=seed))
    return paths
