"""Random sampling of complement edges.

Two strategies build a sparse subgraph of the complement: node-based
sampling draws up to S non-neighbors per node, edge-based sampling draws up
to S non-neighbors for each endpoint of every edge (so a node of degree d
contributes up to S*d draws). Draws are batched rejection rounds against
the adjacency table, with an explicit-enumeration fallback for nodes whose
complement neighborhood is too small to hit by chance; duplicates collapse
into one undirected edge set.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

import numpy as np

from .graphs import Graph, build_graph

__all__ = [
    "SampleKind",
    "SampleStrategy",
    "SampledComplement",
    "sample_complement",
    "expected_edge_bound",
]

REJECTION_ROUNDS = 10


class SampleKind(Enum):
    NODE_BASED = "node"
    EDGE_BASED = "edge"


@dataclass(frozen=True)
class SampleStrategy:
    """Sampling strategy selector with its multiple S (>= 1)."""

    kind: SampleKind
    s: int = 1

    def __post_init__(self):
        if self.s < 1:
            raise ValueError(f"sampling multiple must be >= 1, got {self.s}")


@dataclass(frozen=True)
class SampledComplement:
    """A sampled complement subgraph plus its provenance."""

    graph: Graph
    strategy: SampleStrategy
    seed: int | None


def expected_edge_bound(g: Graph, strategy: SampleStrategy) -> int:
    """Worst-case edge count: S*n node-based, 2*S*|E| edge-based."""
    if strategy.kind is SampleKind.NODE_BASED:
        return strategy.s * g.n
    return 2 * strategy.s * g.num_edges


def _blocked_table(g: Graph) -> np.ndarray:
    # adjacency plus the diagonal: everything a draw must avoid
    blocked = np.zeros((g.n, g.n), dtype=bool)
    for u, v in g.edges:
        blocked[u, v] = True
        blocked[v, u] = True
    np.fill_diagonal(blocked, True)
    return blocked


def _draw_per_node(rng: np.random.Generator, blocked: np.ndarray, need: np.ndarray) -> np.ndarray:
    """Boolean pick table: need[u] distinct non-blocked partners per node u.

    ``need`` must already be capped by the complement degree. Batched
    rejection draws run for a fixed number of rounds; nodes still short
    afterwards fall back to enumerating their complement neighborhood.
    """
    n = blocked.shape[0]
    picked = np.zeros((n, n), dtype=bool)
    have = np.zeros(n, dtype=np.int64)
    for _ in range(REJECTION_ROUNDS):
        missing = need - have
        nodes = np.repeat(np.arange(n), missing.clip(min=0))
        if nodes.size == 0:
            return picked
        draws = rng.integers(0, n, size=nodes.size)
        ok = ~blocked[nodes, draws] & ~picked[nodes, draws]
        # collapse duplicate (node, draw) pairs drawn in the same round
        pair_ids = nodes[ok] * n + draws[ok]
        unique = np.unique(pair_ids)
        picked[unique // n, unique % n] = True
        have = picked.sum(axis=1)
    for u in np.flatnonzero(need - have > 0):
        candidates = np.flatnonzero(~blocked[u] & ~picked[u])
        extra = rng.choice(candidates.size, size=int(need[u] - have[u]), replace=False)
        picked[u, candidates[extra]] = True
    return picked


def sample_complement(g: Graph, strategy: SampleStrategy, rng) -> SampledComplement:
    """Draw a sparse subgraph of g's complement.

    ``rng`` is an integer seed or a numpy Generator; the seed is recorded in
    the result when known. A pair reached from both endpoints collapses into
    one edge, so edge counts never exceed ``expected_edge_bound``. Nodes
    with fewer candidates than requested contribute all of them.
    """
    if g.n < 2:
        raise ValueError("sampling needs at least two nodes")
    seed = None
    if isinstance(rng, (int, np.integer)):
        seed = int(rng)
        rng = np.random.default_rng(seed)
    blocked = _blocked_table(g)
    comp_degree = g.n - 1 - np.asarray(g.degrees, dtype=np.int64)
    if strategy.kind is SampleKind.NODE_BASED:
        need = np.minimum(strategy.s, comp_degree)
    else:
        draws_per_node = strategy.s * np.asarray(g.degrees, dtype=np.int64)
        need = np.minimum(draws_per_node, comp_degree)
    picked = _draw_per_node(rng, blocked, need)
    us, vs = np.nonzero(picked)
    graph = build_graph(g.n, zip(us.tolist(), vs.tolist()))
    return SampledComplement(graph=graph, strategy=strategy, seed=seed)
