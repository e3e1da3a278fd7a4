"""Policy checkpoint persistence.

A checkpoint is a small JSON document holding the ansatz shape, both
parameter tensors flattened in row-major layer/qubit/slot order at full
double precision (JSON floats round-trip exactly), the regularization rate
used in training, and the RNG seed of the run that produced it.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import ConfigurationError
from .policy import AnsatzSpec, PolicyParams

FORMAT_TAG = "qpgrad-checkpoint-v1"


@dataclass(frozen=True)
class Checkpoint:
    ansatz: AnsatzSpec
    params: PolicyParams
    lam: float
    seed: int


def save_checkpoint(path, ansatz: AnsatzSpec, params: PolicyParams, lam: float, seed: int) -> None:
    doc = {
        "format": FORMAT_TAG,
        "n_qubits": ansatz.n_qubits,
        "n_layers": ansatz.n_layers,
        "entangler": ansatz.entangler,
        "encoding": ansatz.encoding,
        "generator_norm": ansatz.generator_norm,
        "nu": params.nu.reshape(-1).tolist(),
        "omega": params.omega.reshape(-1).tolist(),
        "lambda": lam,
        "seed": seed,
    }
    Path(path).write_text(json.dumps(doc, indent=1) + "\n")


def load_checkpoint(path) -> Checkpoint:
    path = Path(path)
    if not path.exists():
        raise ConfigurationError(f"checkpoint {path} does not exist")
    try:
        doc = json.loads(path.read_text())
    except json.JSONDecodeError as exc:
        raise ConfigurationError(f"checkpoint {path} is not valid JSON: {exc}") from exc
    if doc.get("format") != FORMAT_TAG:
        raise ConfigurationError(f"checkpoint {path} has unknown format {doc.get('format')!r}")
    ansatz = AnsatzSpec(
        n_qubits=int(doc["n_qubits"]),
        n_layers=int(doc["n_layers"]),
        entangler=doc["entangler"],
        encoding=doc["encoding"],
        generator_norm=float(doc["generator_norm"]),
    )
    shape = ansatz.param_shape
    n = ansatz.n_params_each
    nu = np.asarray(doc["nu"], dtype=np.float64)
    omega = np.asarray(doc["omega"], dtype=np.float64)
    if nu.shape != (n,) or omega.shape != (n,):
        raise ConfigurationError(
            f"checkpoint {path}: parameter length {nu.shape}/{omega.shape} does not match ansatz ({n},)"
        )
    params = PolicyParams(nu.reshape(shape), omega.reshape(shape))
    return Checkpoint(ansatz=ansatz, params=params, lam=float(doc["lambda"]), seed=int(doc["seed"]))
