"""Synthetic block-model datasets and on-disk dataset loading.

The generator solves intra/inter-class edge probabilities so the expected
homophily ratio hits a target at a given average degree, then draws
class-mean Gaussian features. External datasets are three headerless
files: an edge list, a features CSV, and a labels CSV (one node per row,
row index = node id).
"""

from __future__ import annotations

import json
from dataclasses import dataclass, replace
from pathlib import Path

import numpy as np

from .graphs import Graph, ParseError, build_graph, homophily_ratio, is_connected, read_edge_list, write_edge_list

__all__ = [
    "InfeasibleSpecError",
    "RowCountMismatchError",
    "Dataset",
    "SbmSpec",
    "generate_sbm",
    "load_dataset",
    "read_features_csv",
    "load_dataset_dir",
    "save_dataset",
]


class InfeasibleSpecError(ValueError):
    """The requested block model cannot be realized."""


class RowCountMismatchError(ValueError):
    """Features, labels, and graph disagree on the node count."""


@dataclass
class Dataset:
    """Node classification instance: graph, features, labels, optional masks."""

    graph: Graph
    features: np.ndarray
    labels: np.ndarray
    num_classes: int
    masks: dict[str, np.ndarray] | None = None

    def __post_init__(self):
        self.features = np.asarray(self.features, dtype=np.float64)
        self.labels = np.asarray(self.labels, dtype=np.int64)
        n = self.graph.n
        if self.features.ndim != 2 or self.features.shape[0] != n:
            raise RowCountMismatchError(f"features shape {self.features.shape} vs {n} nodes")
        if self.labels.shape != (n,):
            raise RowCountMismatchError(f"labels shape {self.labels.shape} vs {n} nodes")
        if self.num_classes < 2:
            raise ValueError(f"need at least 2 classes, got {self.num_classes}")
        if self.labels.min() < 0 or self.labels.max() >= self.num_classes:
            raise ValueError("labels outside [0, num_classes)")

    @property
    def n(self) -> int:
        return self.graph.n


@dataclass(frozen=True)
class SbmSpec:
    """Block-model recipe targeting a homophily ratio at a given degree."""

    n: int
    num_classes: int
    target_homophily: float
    avg_degree: float
    feature_dim: int
    feature_signal: float = 1.0
    seed: int = 0
    require_connected: bool = True

    def __post_init__(self):
        if self.n < self.num_classes or self.num_classes < 2:
            raise InfeasibleSpecError(f"n={self.n} with {self.num_classes} classes")
        if not 0.0 <= self.target_homophily <= 1.0:
            raise InfeasibleSpecError(f"target homophily {self.target_homophily} outside [0,1]")
        if self.avg_degree <= 0 or self.feature_dim < 1 or self.feature_signal < 0:
            raise InfeasibleSpecError("avg_degree, feature_dim, feature_signal out of range")


def _block_probabilities(spec: SbmSpec, labels: np.ndarray) -> tuple[float, float]:
    # Expected intra-edge share = target homophily at the requested degree.
    n = spec.n
    counts = np.bincount(labels, minlength=spec.num_classes)
    intra_pairs = float((counts * (counts - 1) // 2).sum())
    total_pairs = n * (n - 1) / 2.0
    inter_pairs = total_pairs - intra_pairs
    m_expected = n * spec.avg_degree / 2.0
    p_in = spec.target_homophily * m_expected / intra_pairs if intra_pairs else 0.0
    p_out = (1.0 - spec.target_homophily) * m_expected / inter_pairs if inter_pairs else 0.0
    if p_in > 1.0 or p_out > 1.0:
        raise InfeasibleSpecError(
            f"edge probabilities p_in={p_in:.3f}, p_out={p_out:.3f} exceed 1; lower avg_degree"
        )
    return p_in, p_out


def _class_means(rng: np.random.Generator, c: int, d: int, signal: float) -> np.ndarray:
    if d >= c:
        means = np.zeros((c, d))
        means[np.arange(c), np.arange(c)] = 1.0
    else:
        means = rng.standard_normal((c, d))
        means /= np.linalg.norm(means, axis=1, keepdims=True)
    return signal * means


def generate_sbm(spec: SbmSpec, rng=None) -> Dataset:
    """Draw a block-model dataset; deterministic for a fixed seed.

    Retries up to 20 times when the draw is disconnected (or edgeless) and
    ``require_connected`` is set, then raises InfeasibleSpecError.
    """
    if rng is None:
        rng = np.random.default_rng(spec.seed)
    elif isinstance(rng, (int, np.integer)):
        rng = np.random.default_rng(int(rng))
    labels = np.arange(spec.n) % spec.num_classes
    p_in, p_out = _block_probabilities(spec, labels)
    iu, ju = np.triu_indices(spec.n, k=1)
    pair_p = np.where(labels[iu] == labels[ju], p_in, p_out)

    graph = None
    for _ in range(20):
        mask = rng.random(pair_p.shape[0]) < pair_p
        candidate = build_graph(spec.n, zip(iu[mask].tolist(), ju[mask].tolist()))
        if candidate.num_edges == 0:
            continue
        if not spec.require_connected or is_connected(candidate):
            graph = candidate
            break
    if graph is None:
        raise InfeasibleSpecError(
            "could not draw a connected graph in 20 attempts; raise avg_degree or relax require_connected"
        )

    means = _class_means(rng, spec.num_classes, spec.feature_dim, spec.feature_signal)
    features = means[labels] + rng.standard_normal((spec.n, spec.feature_dim))
    return Dataset(graph=graph, features=features, labels=labels, num_classes=spec.num_classes)


def _drop_edges(ds: Dataset, rate: float, rng) -> Dataset:
    from .regularizers import dropedge_transform

    return replace(ds, graph=dropedge_transform(ds.graph, rate, rng), masks=ds.masks)


def remove_random_edges(ds: Dataset, rate: float, rng) -> Dataset:
    """Dataset with a fraction of edges removed once, before any training."""
    return _drop_edges(ds, rate, rng)


def read_features_csv(path) -> np.ndarray:
    rows = []
    width = None
    for lineno, raw in enumerate(Path(path).read_text(encoding="utf-8").splitlines(), start=1):
        line = raw.strip()
        if not line:
            continue
        cells = line.split(",")
        if width is None:
            width = len(cells)
        elif len(cells) != width:
            raise ParseError(f"{path}:{lineno}: expected {width} columns, got {len(cells)}")
        try:
            rows.append([float(c) for c in cells])
        except ValueError as exc:
            raise ParseError(f"{path}:{lineno}: non-numeric cell in {raw!r}") from exc
    if not rows:
        raise ParseError(f"{path}: no feature rows")
    return np.asarray(rows, dtype=np.float64)


def _read_labels_csv(path) -> np.ndarray:
    labels = []
    for lineno, raw in enumerate(Path(path).read_text(encoding="utf-8").splitlines(), start=1):
        line = raw.strip()
        if not line:
            continue
        try:
            labels.append(int(line))
        except ValueError as exc:
            raise ParseError(f"{path}:{lineno}: non-integer label {raw!r}") from exc
    if not labels:
        raise ParseError(f"{path}: no labels")
    return np.asarray(labels, dtype=np.int64)


def load_dataset(graph_path, features_path, labels_path) -> Dataset:
    """Load a dataset from an edge list plus features and labels CSVs."""
    features = read_features_csv(features_path)
    labels = _read_labels_csv(labels_path)
    n = features.shape[0]
    if labels.shape[0] != n:
        raise RowCountMismatchError(f"{labels.shape[0]} labels for {n} feature rows")
    graph = read_edge_list(graph_path, n=n)
    return Dataset(graph=graph, features=features, labels=labels, num_classes=int(labels.max()) + 1)


def load_dataset_dir(directory) -> Dataset:
    d = Path(directory)
    return load_dataset(d / "edges.txt", d / "features.csv", d / "labels.csv")


def save_dataset(ds: Dataset, directory, meta: dict | None = None) -> None:
    """Write edges.txt, features.csv, labels.csv, and meta.json."""
    d = Path(directory)
    d.mkdir(parents=True, exist_ok=True)
    write_edge_list(ds.graph, d / "edges.txt")
    lines = [",".join(f"{x:.17g}" for x in row) for row in ds.features]
    (d / "features.csv").write_text("\n".join(lines) + "\n", encoding="utf-8")
    (d / "labels.csv").write_text("\n".join(str(int(y)) for y in ds.labels) + "\n", encoding="utf-8")
    info = {
        "n": ds.n,
        "num_edges": ds.graph.num_edges,
        "num_classes": ds.num_classes,
        "feature_dim": ds.features.shape[1],
        "homophily": homophily_ratio(ds.graph, ds.labels) if ds.graph.edges else None,
    }
    if meta:
        info.update(meta)
    (d / "meta.json").write_text(json.dumps(info, indent=2, sort_keys=True) + "\n", encoding="utf-8")
