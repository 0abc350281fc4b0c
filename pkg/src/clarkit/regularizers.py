"""Differentiable graph regularizers and graph transforms.

The complement-Laplacian regularizer (CLAR) penalizes the trace quadratic
form of the model output on a sampled complement graph (high-pass pressure)
plus the same form on the original graph (low-pass balance), each clamped
to [0, clamp_hi] with zero gradient outside. The comparison methods are
plain Laplacian regularization (network lasso), its squared variant, a
higher-order neighbor difference penalty, and random edge dropping, which
acts on the propagation graph instead of the loss.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum

import numpy as np

from .autodiff import ShapeMismatchError, Tape, Tensor
from .graphs import (
    Graph,
    LaplacianKind,
    build_graph,
    dense_laplacian,
    is_complement_edge,
    laplacian,
    normalized_adjacency,
)
from .sampling import SampledComplement, SampleKind, SampleStrategy

__all__ = [
    "NotAComplementError",
    "RegKind",
    "RegularizerSpec",
    "RegularizerOutput",
    "trace_penalty",
    "clar_loss",
    "nl_loss",
    "preg_loss",
    "preg_matrix",
    "madreg_loss",
    "madreg_matrix",
    "dropedge_transform",
    "total_loss",
]


class NotAComplementError(ValueError):
    """The sampled graph contains an edge of the original graph."""


class RegKind(Enum):
    CLAR = "clar"
    NETWORK_LASSO = "nl"
    PREG = "preg"
    MADREG = "madreg"
    DROPEDGE = "dropedge"
    NONE = "none"


@dataclass(frozen=True)
class RegularizerSpec:
    """Regularizer selection plus hyperparameters.

    ``alpha`` weights the original-graph trace and ``beta`` the complement
    trace (CLAR only); ``gamma`` weights the other loss-based regularizers;
    ``clamp_hi`` bounds each CLAR/MADReg trace; ``drop_rate`` is the edge
    removal probability for DropEdge. Network lasso is CLAR with alpha=1,
    beta=0 up to the Laplacian normalization choice.
    """

    kind: RegKind = RegKind.NONE
    alpha: float = 0.0
    beta: float = 0.0
    gamma: float = 0.1
    strategy: SampleStrategy = field(default_factory=lambda: SampleStrategy(SampleKind.NODE_BASED, 1))
    clamp_hi: float = 1.0
    drop_rate: float = 0.0
    resample_each_epoch: bool = True
    laplacian_kind: LaplacianKind = LaplacianKind.SYM_NORMALIZED

    def __post_init__(self):
        if not 0.0 <= self.drop_rate < 1.0:
            raise ValueError(f"drop_rate must lie in [0,1), got {self.drop_rate}")
        if self.clamp_hi < 0.0:
            raise ValueError(f"clamp_hi must be >= 0, got {self.clamp_hi}")

    def to_json(self) -> dict:
        return {
            "reg": self.kind.value,
            "alpha": self.alpha,
            "beta": self.beta,
            "gamma": self.gamma,
            "S": self.strategy.s,
            "strategy": self.strategy.kind.value,
            "clamp": None if math.isinf(self.clamp_hi) else self.clamp_hi,
            "drop_rate": self.drop_rate,
            "resample": self.resample_each_epoch,
            "laplacian": self.laplacian_kind.value,
        }

    @classmethod
    def from_json(cls, cfg: dict) -> "RegularizerSpec":
        cfg = dict(cfg)
        kind = RegKind(cfg.pop("reg", "none"))
        strategy = SampleStrategy(SampleKind(cfg.pop("strategy", "node")), int(cfg.pop("S", 1)))
        clamp = cfg.pop("clamp", 1.0)
        return cls(
            kind=kind,
            alpha=float(cfg.pop("alpha", 0.0)),
            beta=float(cfg.pop("beta", 0.0)),
            gamma=float(cfg.pop("gamma", 0.1)),
            strategy=strategy,
            clamp_hi=math.inf if clamp is None else float(clamp),
            drop_rate=float(cfg.pop("drop_rate", 0.0)),
            resample_each_epoch=bool(cfg.pop("resample", True)),
            laplacian_kind=LaplacianKind(cfg.pop("laplacian", "sym")),
        )


@dataclass
class RegularizerOutput:
    """Either a loss term or a replacement propagation graph (DropEdge)."""

    loss: Tensor | None = None
    transformed_graph: Graph | None = None


def trace_penalty(tape: Tape, h, m: np.ndarray, clamp_hi: float = math.inf) -> Tensor:
    """tr(h^T M h), optionally clamped to [0, clamp_hi] with zero gradient outside."""
    t = tape.trace_quad(h, m)
    if math.isinf(clamp_hi):
        return t
    return tape.clamp(t, 0.0, clamp_hi)


@lru_cache(maxsize=32)
def _edge_arrays(g: Graph) -> tuple[np.ndarray, np.ndarray]:
    us = np.fromiter((u for u, _ in g.edges), dtype=np.int64, count=g.num_edges)
    vs = np.fromiter((v for _, v in g.edges), dtype=np.int64, count=g.num_edges)
    return us, vs


def laplacian_quad(tape: Tape, h, g: Graph, kind: LaplacianKind, clamp_hi: float = math.inf) -> Tensor:
    """Laplacian trace penalty in sparse edge-sum form.

    Equal to trace_penalty(tape, h, laplacian(g, kind), clamp_hi) but costs
    O(|E| * cols) per evaluation instead of O(n^2 * cols); self-loop terms
    vanish and are skipped.
    """
    us, vs = _edge_arrays(g)
    deg = np.asarray(g.degrees, dtype=np.float64)
    if kind is LaplacianKind.UNNORMALIZED:
        scale = np.ones(g.n)
    elif kind is LaplacianKind.SYM_NORMALIZED:
        scale = np.zeros(g.n)
        np.divide(1.0, np.sqrt(deg), out=scale, where=deg > 0)
    else:
        scale = 1.0 / np.sqrt(deg + 1.0)
    t = tape.edge_diff_quad(h, us, vs, scale[us], scale[vs])
    if math.isinf(clamp_hi):
        return t
    return tape.clamp(t, 0.0, clamp_hi)


def clar_loss(
    tape: Tape,
    h,
    g: Graph,
    gs: SampledComplement | Graph,
    alpha: float,
    beta: float,
    clamp_hi: float = math.inf,
    kind: LaplacianKind = LaplacianKind.SYM_NORMALIZED,
) -> Tensor:
    """beta * clamp(tr(h^T L_s h)) + alpha * clamp(tr(h^T L h)).

    L_s is the Laplacian of the sampled complement and L that of the
    original graph, both of the requested normalization. Raises
    NotAComplementError if the sample shares an edge with the original.
    """
    sample = gs.graph if isinstance(gs, SampledComplement) else gs
    if sample.n != g.n:
        raise ShapeMismatchError(f"sample has {sample.n} nodes, graph has {g.n}")
    original = set(g.edges)
    for u, v in sample.edges:
        if (u, v) in original:
            raise NotAComplementError(f"sampled edge ({u},{v}) exists in the original graph")
    com = trace_penalty(tape, h, laplacian(sample, kind), clamp_hi)
    ori = trace_penalty(tape, h, laplacian(g, kind), clamp_hi)
    return tape.add(tape.scale(com, beta), tape.scale(ori, alpha))


def nl_loss(tape: Tape, h, g: Graph) -> Tensor:
    """Laplacian trace penalty with the self-loop normalized Laplacian."""
    return tape.trace_quad(h, laplacian(g, LaplacianKind.SELF_LOOP_SYM_NORMALIZED))


def preg_matrix(g: Graph) -> np.ndarray:
    lap = laplacian(g, LaplacianKind.SELF_LOOP_SYM_NORMALIZED)
    return lap.T @ lap


def preg_loss(tape: Tape, h, g: Graph) -> Tensor:
    """Squared-Laplacian trace penalty: tr(h^T L^T L h)."""
    return tape.trace_quad(h, preg_matrix(g))


def madreg_matrix(g: Graph) -> np.ndarray:
    """(ones - L(P^7)) - L(P^3) with P the self-loop normalized adjacency.

    Powers are matrix powers; L(.) renormalizes the rows of the powered
    matrix into a normalized Laplacian.
    """
    p = normalized_adjacency(g, self_loops=True)
    high = dense_laplacian(np.linalg.matrix_power(p, 7), normalized=True)
    low = dense_laplacian(np.linalg.matrix_power(p, 3), normalized=True)
    return (np.ones((g.n, g.n)) - high) - low


def madreg_loss(tape: Tape, h, g: Graph, clamp_hi: float = math.inf) -> Tensor:
    """Higher-order minus lower-order neighbor difference penalty, clamped like CLAR."""
    return trace_penalty(tape, h, madreg_matrix(g), clamp_hi)


def dropedge_transform(g: Graph, drop_rate: float, rng) -> Graph:
    """Keep each edge independently with probability 1 - drop_rate."""
    if not 0.0 <= drop_rate < 1.0:
        raise ValueError(f"drop_rate must lie in [0,1), got {drop_rate}")
    if isinstance(rng, (int, np.integer)):
        rng = np.random.default_rng(int(rng))
    if drop_rate == 0.0 or not g.edges:
        return g
    keep = rng.random(g.num_edges) >= drop_rate
    kept = [e for e, k in zip(g.edges, keep) if k]
    return build_graph(g.n, kept)


def total_loss(tape: Tape, cls_loss: Tensor, spec: RegularizerSpec, reg_loss: Tensor | None) -> Tensor:
    """Combine classification and regularization losses.

    CLAR carries its own weights (alpha, beta); the other loss-based
    regularizers are scaled by gamma; DropEdge and None add nothing.
    """
    if reg_loss is None or spec.kind in (RegKind.NONE, RegKind.DROPEDGE):
        return cls_loss
    if spec.kind is RegKind.CLAR:
        return tape.add(cls_loss, reg_loss)
    return tape.add(cls_loss, tape.scale(reg_loss, spec.gamma))
