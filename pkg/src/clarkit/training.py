"""Training loops: Adam, data splits, early stopping, filter fitting.

A session is fully determined by (dataset, config, seed): one seeded
generator drives split creation, weight init, and per-epoch sampling in a
fixed order, so reruns reproduce results bit-for-bit on one platform.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .autodiff import NonFiniteGradError, NonFiniteLossError, Tape, Tensor
from .datasets import Dataset
from .graphs import Graph, propagation_matrix
from .models import GcnModel, MlpModel, accuracy, gcn_forward, init_gcn, init_mlp, mlp_forward, model_params
from .regularizers import (
    RegKind,
    RegularizerSpec,
    clar_loss,
    dropedge_transform,
    madreg_matrix,
    preg_matrix,
    total_loss,
    trace_penalty,
)
from .sampling import sample_complement

__all__ = [
    "InsufficientNodesError",
    "Adam",
    "SplitSpec",
    "make_split",
    "TrainConfig",
    "TrainResult",
    "train",
    "fit_filter",
]


class InsufficientNodesError(ValueError):
    """The dataset is too small for the requested split."""


class Adam(object):
    """Adam with bias correction over a list of parameter tensors."""

    def __init__(self, params: list[Tensor], lr: float, beta1: float = 0.9, beta2: float = 0.999, eps: float = 1e-8):
        self.params = params
        self.lr = lr
        self.beta1 = beta1
        self.beta2 = beta2
        self.eps = eps
        self.t = 0
        self.m = [np.zeros_like(p.value) for p in params]
        self.v = [np.zeros_like(p.value) for p in params]

    def step(self) -> None:
        self.t += 1
        for p, m, v in zip(self.params, self.m, self.v):
            g = p.grad if p.grad is not None else np.zeros_like(p.value)
            if not np.all(np.isfinite(g)):
                raise NonFiniteGradError("gradient is not finite")
            np.copyto(m, self.beta1 * m + (1.0 - self.beta1) * g)
            np.copyto(v, self.beta2 * v + (1.0 - self.beta2) * g * g)
            mhat = m / (1.0 - self.beta1**self.t)
            vhat = v / (1.0 - self.beta2**self.t)
            p.value -= self.lr * mhat / (np.sqrt(vhat) + self.eps)


@dataclass(frozen=True)
class SplitSpec:
    """Either stratified fractions or fixed per-class counts."""

    kind: str = "random"  # "random" | "planetoid"
    train_frac: float = 0.6
    val_frac: float = 0.2
    test_frac: float = 0.2
    per_class_train: int = 20
    val_count: int = 500
    test_count: int = 1000

    def __post_init__(self):
        if self.kind not in ("random", "planetoid"):
            raise ValueError(f"unknown split kind {self.kind!r}")
        if self.kind == "random" and abs(self.train_frac + self.val_frac + self.test_frac - 1.0) > 1e-9:
            raise ValueError("split fractions must sum to 1")

    @classmethod
    def random_fraction(cls, train: float = 0.6, val: float = 0.2, test: float = 0.2) -> "SplitSpec":
        return cls(kind="random", train_frac=train, val_frac=val, test_frac=test)

    @classmethod
    def planetoid(cls, per_class_train: int = 20, val_count: int = 500, test_count: int = 1000) -> "SplitSpec":
        return cls(kind="planetoid", per_class_train=per_class_train, val_count=val_count, test_count=test_count)

    def to_json(self) -> dict:
        if self.kind == "random":
            return {"split": "random", "train": self.train_frac, "val": self.val_frac, "test": self.test_frac}
        return {
            "split": "planetoid",
            "per_class_train": self.per_class_train,
            "val_count": self.val_count,
            "test_count": self.test_count,
        }

    @classmethod
    def from_json(cls, cfg: dict) -> "SplitSpec":
        kind = cfg.get("split", "random")
        if kind == "random":
            return cls.random_fraction(cfg.get("train", 0.6), cfg.get("val", 0.2), cfg.get("test", 0.2))
        return cls.planetoid(cfg.get("per_class_train", 20), cfg.get("val_count", 500), cfg.get("test_count", 1000))


def make_split(ds: Dataset, spec: SplitSpec, rng: np.random.Generator) -> dict[str, np.ndarray]:
    """Disjoint boolean train/val/test masks; deterministic per rng state."""
    n = ds.n
    assign = np.full(n, -1, dtype=np.int64)  # 0 train, 1 val, 2 test
    if spec.kind == "random":
        for c in range(ds.num_classes):
            idx = np.flatnonzero(ds.labels == c)
            rng.shuffle(idx)
            n_c = idx.size
            n_train = int(round(spec.train_frac * n_c))
            n_val = int(round(spec.val_frac * n_c))
            n_val = min(n_val, n_c - n_train)
            assign[idx[:n_train]] = 0
            assign[idx[n_train : n_train + n_val]] = 1
            assign[idx[n_train + n_val :]] = 2
    else:
        for c in range(ds.num_classes):
            idx = np.flatnonzero(ds.labels == c)
            if idx.size < spec.per_class_train:
                raise InsufficientNodesError(f"class {c} has {idx.size} < {spec.per_class_train} nodes")
            rng.shuffle(idx)
            assign[idx[: spec.per_class_train]] = 0
        rest = np.flatnonzero(assign < 0)
        if rest.size < spec.val_count + spec.test_count:
            raise InsufficientNodesError(
                f"{rest.size} nodes left for {spec.val_count} val + {spec.test_count} test"
            )
        rng.shuffle(rest)
        assign[rest[: spec.val_count]] = 1
        assign[rest[spec.val_count : spec.val_count + spec.test_count]] = 2
    masks = {name: assign == code for code, name in enumerate(("train", "val", "test"))}
    for name, mask in masks.items():
        if not mask.any():
            raise InsufficientNodesError(f"{name} mask is empty")
    return masks


@dataclass
class TrainConfig:
    lr: float = 0.01
    max_epochs: int = 200
    patience: int = 20
    hidden_dim: int = 16
    depth: int = 2
    seed: int = 0
    backbone: str = "gcn"  # "gcn" | "mlp"
    reg: RegularizerSpec = field(default_factory=RegularizerSpec)
    split: SplitSpec = field(default_factory=SplitSpec)

    def __post_init__(self):
        if self.lr <= 0:
            raise ValueError(f"lr must be positive, got {self.lr}")
        if self.max_epochs < 1 or self.patience > self.max_epochs:
            raise ValueError(f"need 1 <= patience <= max_epochs, got {self.patience}/{self.max_epochs}")
        if self.backbone not in ("gcn", "mlp"):
            raise ValueError(f"unknown backbone {self.backbone!r}")

    def to_json(self) -> dict:
        return {
            "lr": self.lr,
            "max_epochs": self.max_epochs,
            "patience": self.patience,
            "hidden_dim": self.hidden_dim,
            "depth": self.depth,
            "seed": self.seed,
            "backbone": self.backbone,
            "reg": self.reg.to_json(),
            "split": self.split.to_json(),
        }

    @classmethod
    def from_json(cls, cfg: dict) -> "TrainConfig":
        return cls(
            lr=float(cfg.get("lr", 0.01)),
            max_epochs=int(cfg.get("max_epochs", 200)),
            patience=int(cfg.get("patience", 20)),
            hidden_dim=int(cfg.get("hidden_dim", 16)),
            depth=int(cfg.get("depth", 2)),
            seed=int(cfg.get("seed", 0)),
            backbone=cfg.get("backbone", "gcn"),
            reg=RegularizerSpec.from_json(cfg.get("reg", {})),
            split=SplitSpec.from_json(cfg.get("split", {})),
        )


@dataclass
class TrainResult:
    best_val_epoch: int
    best_val_accuracy: float
    test_accuracy: float
    train_losses: list[float]
    val_accuracies: list[float]
    val_losses: list[float]
    epochs_run: int
    params: list[np.ndarray]

    def metrics_json(self, cfg: TrainConfig) -> dict:
        return {
            "config": cfg.to_json(),
            "seed": cfg.seed,
            "epochs_run": self.epochs_run,
            "best_val_epoch": self.best_val_epoch,
            "metrics": {
                "best_val_accuracy": self.best_val_accuracy,
                "test_accuracy": self.test_accuracy,
            },
            "traces": {
                "train_loss": self.train_losses,
                "val_accuracy": self.val_accuracies,
                "val_loss": self.val_losses,
            },
        }


def _build_model(cfg: TrainConfig, rng: np.random.Generator, in_dim: int, out_dim: int):
    if cfg.backbone == "mlp":
        return init_mlp(rng, in_dim, cfg.hidden_dim, out_dim, cfg.depth)
    return init_gcn(rng, in_dim, cfg.hidden_dim, out_dim, cfg.depth)


def _forward(tape: Tape, model, x: np.ndarray, prop: np.ndarray | None) -> Tensor:
    if isinstance(model, MlpModel):
        return mlp_forward(tape, model, x)
    return gcn_forward(tape, model, x, prop)


class _RegContext:
    """Precomputed regularizer state for one training session.

    Static matrices (the original-graph Laplacians, the squared and
    higher-order penalty matrices) are built once; only the sampled
    complement changes between epochs.
    """

    def __init__(self, spec: RegularizerSpec, g: Graph, rng: np.random.Generator):
        from .graphs import LaplacianKind, laplacian

        self.spec = spec
        self.g = g
        self.rng = rng
        self.penalty_matrix = None
        self.frozen_sample = None
        self.original_laplacian = None
        if spec.kind is RegKind.NETWORK_LASSO:
            self.penalty_matrix = laplacian(g, LaplacianKind.SELF_LOOP_SYM_NORMALIZED)
        elif spec.kind is RegKind.PREG:
            self.penalty_matrix = preg_matrix(g)
        elif spec.kind is RegKind.MADREG:
            self.penalty_matrix = madreg_matrix(g)
        elif spec.kind is RegKind.CLAR:
            self.original_laplacian = laplacian(g, spec.laplacian_kind)
            if not spec.resample_each_epoch:
                self.frozen_sample = sample_complement(g, spec.strategy, rng)

    def loss(self, tape: Tape, logits: Tensor) -> Tensor | None:
        spec = self.spec
        if spec.kind in (RegKind.NONE, RegKind.DROPEDGE):
            return None
        if spec.kind is RegKind.CLAR:
            from .graphs import laplacian

            gs = self.frozen_sample or sample_complement(self.g, spec.strategy, self.rng)
            com = trace_penalty(tape, logits, laplacian(gs.graph, spec.laplacian_kind), spec.clamp_hi)
            ori = trace_penalty(tape, logits, self.original_laplacian, spec.clamp_hi)
            return tape.add(tape.scale(com, spec.beta), tape.scale(ori, spec.alpha))
        if spec.kind is RegKind.MADREG:
            return trace_penalty(tape, logits, self.penalty_matrix, spec.clamp_hi)
        return tape.trace_quad(logits, self.penalty_matrix)


def train(ds: Dataset, cfg: TrainConfig) -> TrainResult:
    """Full optimization loop with early stopping on validation accuracy.

    Per epoch: forward, cross-entropy on the train mask, regularizer terms
    (resampling the complement when configured), backward, Adam update.
    Returns the test accuracy at the best-validation parameters; validation
    ties are broken by lower validation loss without resetting patience.
    """
    rng = np.random.default_rng(cfg.seed)
    masks = ds.masks if ds.masks is not None else make_split(ds, cfg.split, rng)
    y = ds.labels
    model = _build_model(cfg, rng, ds.features.shape[1], ds.num_classes)
    params = model_params(model)
    adam = Adam(params, lr=cfg.lr)
    reg_ctx = _RegContext(cfg.reg, ds.graph, rng)

    use_prop = not isinstance(model, MlpModel)
    prop_static = propagation_matrix(ds.graph) if use_prop else None

    best_epoch, best_acc, best_loss = -1, -math.inf, math.inf
    best_params: list[np.ndarray] | None = None
    no_improve = 0
    train_losses: list[float] = []
    val_accuracies: list[float] = []
    val_losses: list[float] = []
    epochs_run = 0

    for epoch in range(cfg.max_epochs):
        epochs_run = epoch + 1
        prop = prop_static
        if use_prop and cfg.reg.kind is RegKind.DROPEDGE:
            prop = propagation_matrix(dropedge_transform(ds.graph, cfg.reg.drop_rate, rng))
        tape = Tape()
        logits = _forward(tape, model, ds.features, prop)
        logp = tape.log_softmax_rows(logits)
        cls = tape.nll_loss(logp, y, masks["train"])
        reg_loss = reg_ctx.loss(tape, logits)
        total = total_loss(tape, cls, cfg.reg, reg_loss)
        if not math.isfinite(float(total.value)):
            raise NonFiniteLossError(f"non-finite loss at epoch {epoch}")

        val_rows = np.flatnonzero(masks["val"])
        val_acc = accuracy(logits.value, y, masks["val"])
        val_loss = float(-logp.value[val_rows, y[val_rows]].mean())
        train_losses.append(float(total.value))
        val_accuracies.append(val_acc)
        val_losses.append(val_loss)

        if val_acc > best_acc:
            best_epoch, best_acc, best_loss = epoch, val_acc, val_loss
            best_params = [p.value.copy() for p in params]
            no_improve = 0
        else:
            if val_acc == best_acc and val_loss < best_loss:
                best_epoch, best_loss = epoch, val_loss
                best_params = [p.value.copy() for p in params]
            no_improve += 1
        if no_improve >= cfg.patience:
            break

        for p in params:
            p.grad = None
        tape.backward(total)
        adam.step()

    for p, v in zip(params, best_params):
        p.value = v
    tape = Tape()
    logits = _forward(tape, model, ds.features, prop_static)
    test_acc = accuracy(logits.value, y, masks["test"])
    return TrainResult(
        best_val_epoch=best_epoch,
        best_val_accuracy=best_acc,
        test_accuracy=test_acc,
        train_losses=train_losses,
        val_accuracies=val_accuracies,
        val_losses=val_losses,
        epochs_run=epochs_run,
        params=[p.value.copy() for p in params],
    )


def fit_filter(g: Graph, x: np.ndarray, target: np.ndarray, cfg: TrainConfig) -> float:
    """Regress node signals onto a precomputed filtered target.

    Minimizes mean squared error (plus the configured regularizer) with
    early stopping on the best MSE seen; returns that best MSE.
    """
    x = np.asarray(x, dtype=np.float64)
    target = np.asarray(target, dtype=np.float64)
    rng = np.random.default_rng(cfg.seed)
    model = init_gcn(rng, x.shape[1], cfg.hidden_dim, target.shape[1], cfg.depth)
    params = model_params(model)
    adam = Adam(params, lr=cfg.lr)
    reg_ctx = _RegContext(cfg.reg, g, rng)
    prop = propagation_matrix(g)

    best = math.inf
    no_improve = 0
    for epoch in range(cfg.max_epochs):
        tape = Tape()
        out = gcn_forward(tape, model, x, prop)
        mse = tape.mse_loss(out, target)
        total = total_loss(tape, mse, cfg.reg, reg_ctx.loss(tape, out))
        mse_value = float(mse.value)
        if not math.isfinite(mse_value) or not math.isfinite(float(total.value)):
            raise NonFiniteLossError(f"non-finite loss at epoch {epoch}")
        if mse_value < best:
            best = mse_value
            no_improve = 0
        else:
            no_improve += 1
        if no_improve >= cfg.patience:
            break
        for p in params:
            p.grad = None
        tape.backward(total)
        adam.step()
    return best
