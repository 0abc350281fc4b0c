"""Dense GCN and MLP backbones on the autodiff tape.

GCN layers are bias-free: each layer multiplies by a fixed propagation
matrix, applies the weight, then ReLU everywhere except the last layer.
The MLP ignores the graph and carries biases.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .autodiff import ShapeMismatchError, Tape, Tensor

__all__ = [
    "GcnModel",
    "MlpModel",
    "glorot_uniform",
    "init_gcn",
    "init_mlp",
    "gcn_forward",
    "mlp_forward",
    "model_params",
    "accuracy",
]


@dataclass
class GcnModel:
    weights: list[Tensor]

    @property
    def depth(self) -> int:
        return len(self.weights)


@dataclass
class MlpModel:
    weights: list[Tensor]
    biases: list[Tensor]

    @property
    def depth(self) -> int:
        return len(self.weights)


def glorot_uniform(rng: np.random.Generator, fan_in: int, fan_out: int) -> np.ndarray:
    limit = np.sqrt(6.0 / (fan_in + fan_out))
    return rng.uniform(-limit, limit, size=(fan_in, fan_out))


def _layer_dims(in_dim: int, hidden_dim: int, out_dim: int, depth: int) -> list[tuple[int, int]]:
    if depth < 1:
        raise ValueError(f"depth must be >= 1, got {depth}")
    dims = [in_dim] + [hidden_dim] * (depth - 1) + [out_dim]
    return list(zip(dims[:-1], dims[1:]))


def init_gcn(rng: np.random.Generator, in_dim: int, hidden_dim: int, out_dim: int, depth: int) -> GcnModel:
    weights = [Tensor(glorot_uniform(rng, fi, fo), requires_grad=True) for fi, fo in _layer_dims(in_dim, hidden_dim, out_dim, depth)]
    return GcnModel(weights=weights)


def init_mlp(rng: np.random.Generator, in_dim: int, hidden_dim: int, out_dim: int, depth: int) -> MlpModel:
    weights = []
    biases = []
    for fi, fo in _layer_dims(in_dim, hidden_dim, out_dim, depth):
        weights.append(Tensor(glorot_uniform(rng, fi, fo), requires_grad=True))
        biases.append(Tensor(np.zeros(fo), requires_grad=True))
    return MlpModel(weights=weights, biases=biases)


def gcn_forward(tape: Tape, model: GcnModel, x, prop: np.ndarray) -> Tensor:
    """Stack of prop @ H @ W layers with ReLU between, linear at the top."""
    x = x if isinstance(x, Tensor) else Tensor(x)
    prop = np.asarray(prop, dtype=np.float64)
    if prop.ndim != 2 or prop.shape[0] != prop.shape[1] or prop.shape[0] != x.value.shape[0]:
        raise ShapeMismatchError(f"propagation {prop.shape} vs signal {x.value.shape}")
    prop_t = Tensor(prop)
    h = x
    for k, w in enumerate(model.weights):
        h = tape.matmul(tape.matmul(prop_t, h), w)
        if k < model.depth - 1:
            h = tape.relu(h)
    return h


def mlp_forward(tape: Tape, model: MlpModel, x) -> Tensor:
    x = x if isinstance(x, Tensor) else Tensor(x)
    h = x
    for k, (w, b) in enumerate(zip(model.weights, model.biases)):
        h = tape.add_bias(tape.matmul(h, w), b)
        if k < model.depth - 1:
            h = tape.relu(h)
    return h


def model_params(model) -> list[Tensor]:
    if isinstance(model, MlpModel):
        return list(model.weights) + list(model.biases)
    return list(model.weights)


def accuracy(logits: np.ndarray, labels, mask=None) -> float:
    """Fraction of (masked) rows whose argmax matches the label."""
    labels = np.asarray(labels)
    pred = np.asarray(logits).argmax(axis=1)
    if mask is not None:
        mask = np.asarray(mask, dtype=bool)
        pred, labels = pred[mask], labels[mask]
    if pred.size == 0:
        raise ValueError("accuracy over an empty selection")
    return float((pred == labels).mean())
