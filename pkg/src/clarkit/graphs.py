"""Undirected simple graphs and their Laplacian matrices.

Graphs are immutable: a node count, a canonical edge set (each edge stored
as (u, v) with u < v), and a degree table. All matrix builders return dense
float64 arrays; desk-scale node counts (n up to a few thousand) keep O(n^2)
storage acceptable.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from pathlib import Path

import numpy as np

__all__ = [
    "GraphError",
    "SelfLoopError",
    "OutOfRangeError",
    "EmptyEdgeSetError",
    "ParseError",
    "LaplacianKind",
    "Graph",
    "build_graph",
    "adjacency_matrix",
    "normalized_adjacency",
    "propagation_matrix",
    "laplacian",
    "dense_laplacian",
    "is_complement_edge",
    "homophily_ratio",
    "neighbor_sets",
    "is_connected",
    "read_edge_list",
    "write_edge_list",
]


class GraphError(ValueError):
    """Base class for graph construction and query errors."""


class SelfLoopError(GraphError):
    """An edge (u, u) was supplied."""


class OutOfRangeError(GraphError):
    """A node id lies outside [0, n)."""


class EmptyEdgeSetError(GraphError):
    """An operation that needs at least one edge got an empty graph."""


class ParseError(GraphError):
    """A text input could not be parsed; the message names the line."""


class LaplacianKind(Enum):
    """Which normalization to apply when building a Laplacian."""

    UNNORMALIZED = "unnorm"
    SYM_NORMALIZED = "sym"
    SELF_LOOP_SYM_NORMALIZED = "selfloop"


@dataclass(frozen=True)
class Graph:
    """Immutable undirected simple graph.

    ``edges`` is sorted and canonical (u < v, no duplicates), so two graphs
    built from permuted or mirrored edge lists compare equal.
    """

    n: int
    edges: tuple[tuple[int, int], ...]
    degrees: tuple[int, ...]

    @property
    def num_edges(self) -> int:
        return len(self.edges)


def build_graph(n: int, edge_list) -> Graph:
    """Validate, canonicalize, and deduplicate an edge list into a Graph.

    Raises OutOfRangeError for endpoints outside [0, n) and SelfLoopError
    for pairs with u == v.
    """
    if n <= 0:
        raise GraphError(f"node count must be positive, got {n}")
    canon = set()
    for u, v in edge_list:
        u, v = int(u), int(v)
        if u == v:
            raise SelfLoopError(f"self-loop ({u},{v}) not allowed")
        if not (0 <= u < n and 0 <= v < n):
            raise OutOfRangeError(f"edge ({u},{v}) outside [0,{n})")
        canon.add((u, v) if u < v else (v, u))
    edges = tuple(sorted(canon))
    deg = [0] * n
    for u, v in edges:
        deg[u] += 1
        deg[v] += 1
    return Graph(n=n, edges=edges, degrees=tuple(deg))


def adjacency_matrix(g: Graph) -> np.ndarray:
    a = np.zeros((g.n, g.n), dtype=np.float64)
    for u, v in g.edges:
        a[u, v] = 1.0
        a[v, u] = 1.0
    return a


def _inv_sqrt_degrees(row_sums: np.ndarray) -> np.ndarray:
    # Pseudo-inverse convention: zero-degree nodes contribute zero rows.
    out = np.zeros_like(row_sums)
    nz = row_sums > 0
    out[nz] = 1.0 / np.sqrt(row_sums[nz])
    return out


def normalized_adjacency(g: Graph, self_loops: bool = True) -> np.ndarray:
    """Symmetrically normalized adjacency D^{-1/2} A D^{-1/2}.

    With ``self_loops`` the identity is added first, which is the usual
    GCN propagation matrix.
    """
    a = adjacency_matrix(g)
    if self_loops:
        a += np.eye(g.n)
    dinv = _inv_sqrt_degrees(a.sum(axis=1))
    return a * dinv[:, None] * dinv[None, :]


def propagation_matrix(g: Graph) -> np.ndarray:
    """Self-loop normalized adjacency used for message passing."""
    return normalized_adjacency(g, self_loops=True)


def laplacian(g: Graph, kind: LaplacianKind) -> np.ndarray:
    """Graph Laplacian of the requested kind.

    UNNORMALIZED is D - A. SYM_NORMALIZED is D^{-1/2} (D - A) D^{-1/2} with
    zero rows for isolated nodes. SELF_LOOP_SYM_NORMALIZED adds the identity
    to A before normalizing, i.e. I - D^{-1/2} (A + I) D^{-1/2}.
    """
    a = adjacency_matrix(g)
    if kind is LaplacianKind.SELF_LOOP_SYM_NORMALIZED:
        a += np.eye(g.n)
    return dense_laplacian(a, normalized=kind is not LaplacianKind.UNNORMALIZED)


def dense_laplacian(weights: np.ndarray, normalized: bool = False) -> np.ndarray:
    """Laplacian of a dense symmetric nonnegative weight matrix.

    Plain form is D - W with D the diagonal of row sums; the normalized form
    is D^{-1/2} (D - W) D^{-1/2}, with zero rows where the row sum vanishes.
    """
    w = np.asarray(weights, dtype=np.float64)
    d = w.sum(axis=1)
    lap = np.diag(d) - w
    if not normalized:
        return lap
    dinv = _inv_sqrt_degrees(d)
    return lap * dinv[:, None] * dinv[None, :]


def neighbor_sets(g: Graph) -> list[set[int]]:
    nbrs: list[set[int]] = [set() for _ in range(g.n)]
    for u, v in g.edges:
        nbrs[u].add(v)
        nbrs[v].add(u)
    return nbrs


def is_complement_edge(g: Graph, u: int, v: int) -> bool:
    """True iff (u, v) is a non-edge between two distinct valid nodes."""
    if not (0 <= u < g.n and 0 <= v < g.n):
        raise OutOfRangeError(f"node pair ({u},{v}) outside [0,{g.n})")
    if u == v:
        return False
    key = (u, v) if u < v else (v, u)
    return key not in set(g.edges)


def homophily_ratio(g: Graph, labels) -> float:
    """Fraction of edges whose endpoints carry the same label."""
    labels = np.asarray(labels)
    if labels.shape[0] != g.n:
        raise GraphError(f"labels length {labels.shape[0]} != node count {g.n}")
    if not g.edges:
        raise EmptyEdgeSetError("homophily ratio undefined on an empty edge set")
    same = sum(1 for u, v in g.edges if labels[u] == labels[v])
    return same / len(g.edges)


def is_connected(g: Graph) -> bool:
    if g.n == 1:
        return True
    nbrs = neighbor_sets(g)
    seen = {0}
    stack = [0]
    while stack:
        u = stack.pop()
        for v in nbrs[u]:
            if v not in seen:
                seen.add(v)
                stack.append(v)
    return len(seen) == g.n


def read_edge_list(path, n: int | None = None) -> Graph:
    """Read a whitespace- or tab-separated edge list with '#' comments.

    Node ids are 0-based; mirrored duplicates are deduplicated. When ``n``
    is not given it is inferred as max id + 1.
    """
    edges = []
    max_id = -1
    for lineno, raw in enumerate(Path(path).read_text(encoding="utf-8").splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        parts = line.split()
        if len(parts) != 2:
            raise ParseError(f"{path}:{lineno}: expected two node ids, got {raw!r}")
        try:
            u, v = int(parts[0]), int(parts[1])
        except ValueError as exc:
            raise ParseError(f"{path}:{lineno}: non-integer node id in {raw!r}") from exc
        edges.append((u, v))
        max_id = max(max_id, u, v)
    if n is None:
        if max_id < 0:
            raise ParseError(f"{path}: empty edge list and no node count given")
        n = max_id + 1
    return build_graph(n, edges)


def write_edge_list(g: Graph, path) -> None:
    lines = [f"{u}\t{v}" for u, v in g.edges]
    Path(path).write_text("\n".join(lines) + ("\n" if lines else ""), encoding="utf-8")
