"""Variational quantum classifier: angle encoding, RY layers with a linear
CNOT chain, Pauli-Z readout, hinge loss, parameter-shift gradients.

The score of a sample is <Z> on the readout qubit in [-1, 1]; the predicted
class is its sign (ties go to +1). Training is full-batch Adam.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, replace
from pathlib import Path

import numpy as np

from .data import FeatureMatrix
from .optim import AdamState, EpochRecord, adam_step
from .simulator import (
    QuantumCircuit,
    apply_cnot,
    apply_gate_amps,
    cnot,
    encode_features,
    encode_features_amps,
    expectation_z,
    expectation_z_amps,
    run_circuit,
    ry,
)

SHIFT = math.pi / 2  # exact-gradient shift for RY parameters

# cap the amplitudes held in memory at once when batching large registers
_CHUNK_AMPLITUDES = 2**23


@dataclass
class QnnModel:
    n_qubits: int
    n_layers: int = 2
    params: np.ndarray | None = None  # length n_layers * n_qubits, row = layer
    readout_qubit: int | None = None  # defaults to the last qubit

    def __post_init__(self):
        if self.n_qubits < 1 or self.n_layers < 1:
            raise ValueError("need at least one qubit and one layer")
        if self.readout_qubit is None:
            self.readout_qubit = self.n_qubits - 1
        if not 0 <= self.readout_qubit < self.n_qubits:
            raise ValueError(f"readout qubit {self.readout_qubit} out of range")
        if self.params is not None:
            self.params = np.asarray(self.params, dtype=float)
            if self.params.shape != (self.n_layers * self.n_qubits,):
                raise ValueError(
                    f"expected {self.n_layers * self.n_qubits} parameters, "
                    f"got {self.params.shape}"
                )

    @property
    def n_params(self) -> int:
        return self.n_layers * self.n_qubits


def init_params(model: QnnModel, seed: int) -> np.ndarray:
    """Uniform angles on [0, pi) from the seed."""
    return np.random.default_rng(seed).uniform(0.0, math.pi, size=model.n_params)


def build_model_circuit(model: QnnModel, x) -> QuantumCircuit:
    """Encoding followed by, per layer, one RY per qubit and a CNOT chain 0->1->...->n-1."""
    vec = np.asarray(x, dtype=float)
    if vec.shape != (model.n_qubits,):
        raise ValueError(f"expected {model.n_qubits} features, got shape {vec.shape}")
    if model.params is None:
        raise ValueError("model has no parameters; initialize or train first")
    circuit = encode_features(vec)
    for layer in range(model.n_layers):
        base = layer * model.n_qubits
        for q in range(model.n_qubits):
            circuit.gates.append(ry(q, float(model.params[base + q])))
        for q in range(model.n_qubits - 1):
            circuit.gates.append(cnot(q, q + 1))
    return circuit


def qnn_forward(model: QnnModel, x) -> float:
    """Score a single sample: <Z> on the readout qubit."""
    state = run_circuit(build_model_circuit(model, x))
    return expectation_z(state, model.readout_qubit)


def _variational_amps(
    params: np.ndarray, amps: np.ndarray, n_qubits: int, n_layers: int
) -> np.ndarray:
    for layer in range(n_layers):
        base = layer * n_qubits
        for q in range(n_qubits):
            amps = apply_gate_amps(amps, ry(q, float(params[base + q])))
        for q in range(n_qubits - 1):
            amps = apply_cnot(amps, q, q + 1)
    return amps


def _chunk_rows(n_qubits: int) -> int:
    return max(1, _CHUNK_AMPLITUDES // (2**n_qubits))


def qnn_scores(model: QnnModel, X: np.ndarray) -> np.ndarray:
    """Batch scores for a (B, n_qubits) feature matrix."""
    X = np.asarray(X, dtype=float)
    if X.ndim != 2 or X.shape[1] != model.n_qubits:
        raise ValueError(f"expected (batch, {model.n_qubits}) features, got {X.shape}")
    if model.params is None:
        raise ValueError("model has no parameters; initialize or train first")
    out = np.empty(X.shape[0])
    step = _chunk_rows(model.n_qubits)
    for start in range(0, X.shape[0], step):
        rows = slice(start, start + step)
        amps = encode_features_amps(X[rows])
        amps = _variational_amps(model.params, amps, model.n_qubits, model.n_layers)
        out[rows] = expectation_z_amps(amps, model.readout_qubit, model.n_qubits)
    return out


def hinge_loss(y: int, score: float) -> float:
    """max(0, 1 - y*score) for a single labeled score."""
    if y not in (-1, 1):
        raise ValueError(f"label must be -1 or +1, got {y}")
    return max(0.0, 1.0 - y * score)


def mean_hinge_loss(labels: np.ndarray, scores: np.ndarray) -> float:
    labels = np.asarray(labels)
    if not np.all(np.isin(labels, (-1, 1))):
        raise ValueError("labels must all be -1 or +1")
    return float(np.mean(np.maximum(0.0, 1.0 - labels * np.asarray(scores))))


def qnn_score_grad(model: QnnModel, x) -> np.ndarray:
    """d<Z>/dtheta for one sample via the two-point shift rule, one entry per parameter."""
    vec = np.asarray(x, dtype=float)
    enc = encode_features_amps(vec[None, :])
    grad = np.empty(model.n_params)
    for j in range(model.n_params):
        plus = _shifted_score(model, j, +SHIFT, enc)
        minus = _shifted_score(model, j, -SHIFT, enc)
        grad[j] = (plus[0] - minus[0]) / 2.0
    return grad


def _shifted_score(model: QnnModel, j: int, delta: float, enc_amps: np.ndarray) -> np.ndarray:
    shifted = model.params.copy()
    shifted[j] += delta
    amps = _variational_amps(shifted, enc_amps, model.n_qubits, model.n_layers)
    return expectation_z_amps(amps, model.readout_qubit, model.n_qubits)


def parameter_shift_grad(model: QnnModel, X: np.ndarray, y: np.ndarray) -> np.ndarray:
    """Gradient of the mean hinge loss over a batch.

    The hinge contributes -y per sample strictly inside the margin and 0
    otherwise (subgradient 0 exactly at the kink); the score derivative is
    the exact two-point parameter shift. Samples past the margin are
    skipped entirely since their contribution is zero.
    """
    X = np.asarray(X, dtype=float)
    y = np.asarray(y)
    if X.shape[0] == 0:
        raise ValueError("empty batch")
    scores = qnn_scores(model, X)
    weight = np.where(y * scores < 1.0, -y.astype(float), 0.0) / X.shape[0]
    active = np.nonzero(weight)[0]
    grad = np.zeros(model.n_params)
    if active.size == 0:
        return grad
    step = _chunk_rows(model.n_qubits)
    for start in range(0, active.size, step):
        rows = active[start : start + step]
        enc = encode_features_amps(X[rows])
        w = weight[rows]
        for j in range(model.n_params):
            plus = _shifted_score(model, j, +SHIFT, enc)
            minus = _shifted_score(model, j, -SHIFT, enc)
            grad[j] += w @ ((plus - minus) / 2.0)
    return grad


def train_qnn(
    model: QnnModel,
    train: FeatureMatrix,
    val: FeatureMatrix,
    epochs: int,
    adam: AdamState | None = None,
    seed: int = 0,
) -> tuple[QnnModel, list[EpochRecord]]:
    """Full-batch Adam for `epochs` epochs; one history record per epoch.

    If the model carries no parameters they are drawn uniform on [0, pi)
    from `seed`; otherwise the given parameters are the starting point and
    the seed is unused.
    """
    if epochs < 1:
        raise ValueError(f"epochs must be >= 1, got {epochs}")
    if train.n_samples == 0 or val.n_samples == 0:
        raise ValueError("train and validation sets must be non-empty")
    params = model.params if model.params is not None else init_params(model, seed)
    model = replace(model, params=params.copy())
    if adam is None:
        adam = AdamState.fresh(model.n_params)

    history: list[EpochRecord] = []
    for _ in range(epochs):
        grads = parameter_shift_grad(model, train.values, train.labels)
        adam, new_params = adam_step(adam, model.params, grads)
        model = replace(model, params=new_params)
        train_scores = qnn_scores(model, train.values)
        val_scores = qnn_scores(model, val.values)
        history.append(
            EpochRecord(
                train_loss=mean_hinge_loss(train.labels, train_scores),
                val_loss=mean_hinge_loss(val.labels, val_scores),
                val_accuracy=float(
                    np.mean(np.where(val_scores >= 0.0, 1, -1) == val.labels)
                ),
            )
        )
    return model, history


def save_qnn(model: QnnModel, path: str | Path) -> None:
    """Text checkpoint: header line, then one parameter per line."""
    if model.params is None:
        raise ValueError("cannot checkpoint an uninitialized model")
    lines = [f"qnn {model.n_qubits} {model.n_layers} {model.readout_qubit}"]
    lines += [format(p, ".17e") for p in model.params]
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def load_qnn(path: str | Path) -> QnnModel:
    lines = Path(path).read_text(encoding="utf-8").splitlines()
    head = lines[0].split()
    if len(head) != 4 or head[0] != "qnn":
        raise ValueError(f"{path}: not a qnn checkpoint")
    n_qubits, n_layers, readout = (int(v) for v in head[1:])
    params = np.asarray([float(v) for v in lines[1 : 1 + n_layers * n_qubits]])
    return QnnModel(n_qubits=n_qubits, n_layers=n_layers, params=params, readout_qubit=readout)
