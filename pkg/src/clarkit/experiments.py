"""Desk-scale experiment runners with reproducible, machine-readable reports.

Every runner returns an ExperimentReport: a config echo with the explicit
seed list, one metric row per unit of work, and aggregates (median/IQR)
recomputable from the rows. Seeds fan out over worker processes when
``threads`` > 1; each unit of work is an independent seeded session, so row
content does not depend on the fan-out.
"""

from __future__ import annotations

import json
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace

import numpy as np

from .datasets import Dataset, remove_random_edges
from .graphs import LaplacianKind, homophily_ratio, laplacian
from .regularizers import RegKind, RegularizerSpec
from .sampling import SampleKind, SampleStrategy
from .spectral import FilterKind, artificial_filter, apply_spectral_filter, band_select, eig_sym
from .training import SplitSpec, TrainConfig, fit_filter, train

__all__ = [
    "ExperimentReport",
    "Variant",
    "rank_with_ties",
    "pearson",
    "spearman",
    "recompute_aggregates",
    "run_filter_fitting",
    "run_band_accuracy",
    "run_oversmoothing",
    "run_robustness",
    "run_sampling_studies",
]

DEFAULT_AB_GRID = ((0.0, 0.0), (1.0, 0.0), (0.0, 1.0), (1.0, 1.0), (2.0, 0.0), (0.0, 2.0), (2.0, 1.0), (1.0, 2.0), (2.0, 2.0))


# ---------------------------------------------------------------------------
# correlation helpers
# ---------------------------------------------------------------------------


def rank_with_ties(values) -> np.ndarray:
    """Average ranks (1-based); ties share the mean of their positions."""
    values = np.asarray(values, dtype=np.float64)
    order = np.argsort(values, kind="stable")
    ranks = np.empty(values.shape[0], dtype=np.float64)
    i = 0
    while i < values.shape[0]:
        j = i
        while j + 1 < values.shape[0] and values[order[j + 1]] == values[order[i]]:
            j += 1
        ranks[order[i : j + 1]] = (i + j) / 2.0 + 1.0
        i = j + 1
    return ranks


def pearson(x, y) -> float | None:
    """Product-moment correlation; None when either vector is constant."""
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if x.shape != y.shape or x.size < 2:
        raise ValueError("pearson needs two equal-length vectors of size >= 2")
    xc, yc = x - x.mean(), y - y.mean()
    denom = math.sqrt(float((xc**2).sum()) * float((yc**2).sum()))
    if denom == 0.0:
        return None
    return float((xc * yc).sum()) / denom


def spearman(x, y) -> tuple[float, bool]:
    """Rank correlation; degenerate (constant) input reports (0.0, True)."""
    r = pearson(rank_with_ties(x), rank_with_ties(y))
    if r is None:
        return 0.0, True
    return r, False


# ---------------------------------------------------------------------------
# report container
# ---------------------------------------------------------------------------


@dataclass
class ExperimentReport:
    name: str
    config: dict
    seeds: list[int]
    rows: list[dict]
    aggregates: dict

    def to_json(self) -> str:
        payload = {
            "experiment": self.name,
            "config": self.config,
            "seeds": self.seeds,
            "rows": self.rows,
            "aggregates": self.aggregates,
        }
        return json.dumps(payload, indent=2, sort_keys=True) + "\n"


def _median_iqr(values) -> dict:
    v = np.asarray(values, dtype=np.float64)
    q1, q3 = np.percentile(v, [25.0, 75.0])
    return {"median": float(np.median(v)), "iqr": float(q3 - q1)}


def _group_rows(rows, keys, value="accuracy"):
    groups: dict[tuple, list[float]] = {}
    for row in rows:
        groups.setdefault(tuple(row[k] for k in keys), []).append(float(row[value]))
    return groups


def recompute_aggregates(report: ExperimentReport) -> dict:
    """Rebuild the aggregate block from the raw rows (used by tests)."""
    return _AGGREGATORS[report.name](report.rows)


def _dataset_summary(ds: Dataset) -> dict:
    return {
        "n": ds.n,
        "num_edges": ds.graph.num_edges,
        "num_classes": ds.num_classes,
        "feature_dim": int(ds.features.shape[1]),
        "homophily": homophily_ratio(ds.graph, ds.labels) if ds.graph.edges else None,
    }


def _map_tasks(worker, payloads, threads: int):
    if threads <= 1:
        return [worker(p) for p in payloads]
    with ProcessPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(worker, payloads))


# ---------------------------------------------------------------------------
# variants: named (backbone, regularizer, optional alpha/beta search grid)
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Variant:
    """A trainable arm of an experiment.

    When ``ab_grid`` is set the arm trains once per (alpha, beta) pair and
    keeps the configuration with the best validation accuracy, mirroring a
    plain hyperparameter search; (0, 0) in the grid makes the arm at least
    as good as the vanilla run on validation data.
    """

    name: str
    backbone: str = "gcn"
    reg: RegularizerSpec = field(default_factory=RegularizerSpec)
    ab_grid: tuple[tuple[float, float], ...] | None = None


def default_variants(clamp: float = 1.0, ab_grid=None) -> list[Variant]:
    grid = tuple(ab_grid) if ab_grid is not None else ((0.0, 0.0), (0.5, 0.0), (0.0, 0.5), (0.5, 0.5), (1.0, 1.0))
    return [
        Variant(name="gcn"),
        Variant(name="gcn+clar", reg=RegularizerSpec(kind=RegKind.CLAR, clamp_hi=clamp), ab_grid=grid),
        Variant(name="mlp", backbone="mlp"),
    ]


def _train_variant(ds: Dataset, variant: Variant, cfg: TrainConfig) -> dict:
    """Train one arm; grid-searching variants select by validation accuracy."""
    if variant.ab_grid is None:
        result = train(ds, replace(cfg, backbone=variant.backbone, reg=variant.reg))
        return {"accuracy": result.test_accuracy, "alpha": None, "beta": None,
                "val_accuracy": result.best_val_accuracy}
    best = None
    for alpha, beta in variant.ab_grid:
        reg = replace(variant.reg, alpha=alpha, beta=beta)
        result = train(ds, replace(cfg, backbone=variant.backbone, reg=reg))
        key = (result.best_val_accuracy, -result.best_val_epoch)
        if best is None or key > best[0]:
            best = (key, result.test_accuracy, alpha, beta, result.best_val_accuracy)
    return {"accuracy": best[1], "alpha": best[2], "beta": best[3], "val_accuracy": best[4]}


# ---------------------------------------------------------------------------
# filter fitting
# ---------------------------------------------------------------------------


def _filter_fitting_task(payload) -> list[dict]:
    ds, kind_value, seed, params = payload
    kind = FilterKind(kind_value)
    target = apply_spectral_filter(ds.graph, LaplacianKind.SYM_NORMALIZED, ds.features, artificial_filter(kind))
    base = TrainConfig(
        lr=params["lr"], max_epochs=params["max_epochs"], patience=params["patience"],
        hidden_dim=params["hidden_dim"], depth=params["depth"], seed=seed,
    )
    rows = [{
        "filter": kind.value, "variant": "gcn", "seed": seed,
        "mse": fit_filter(ds.graph, ds.features, target, base), "alpha": None, "beta": None,
    }]
    best = None
    for alpha, beta in params["ab_grid"]:
        reg = RegularizerSpec(
            kind=RegKind.CLAR, alpha=alpha, beta=beta, clamp_hi=params["clamp"],
            strategy=SampleStrategy(SampleKind(params["strategy"]), params["sample_s"]),
        )
        mse = fit_filter(ds.graph, ds.features, target, replace(base, reg=reg))
        if best is None or mse < best[0]:
            best = (mse, alpha, beta)
    rows.append({
        "filter": kind.value, "variant": "gcn+clar", "seed": seed,
        "mse": best[0], "alpha": best[1], "beta": best[2],
    })
    return rows


def _aggregate_filter_fitting(rows) -> dict:
    out = {}
    for (filt, variant), values in sorted(_group_rows(rows, ("filter", "variant"), value="mse").items()):
        out[f"{filt}/{variant}"] = _median_iqr(values)
    return out


def run_filter_fitting(
    ds: Dataset,
    seeds,
    filters=(FilterKind.HIGH_PASS, FilterKind.LOW_PASS, FilterKind.BAND_PASS, FilterKind.BAND_REJECT),
    ab_grid=DEFAULT_AB_GRID,
    lr: float = 0.1,
    max_epochs: int = 1000,
    patience: int = 50,
    hidden_dim: int = 32,
    depth: int = 2,
    sample_s: int = 1,
    strategy: SampleKind = SampleKind.NODE_BASED,
    clamp: float = 1.0,
    threads: int = 1,
) -> ExperimentReport:
    """Fit each artificial filter target with and without the complement term.

    The regularized arm searches (alpha, beta) over ``ab_grid`` per seed and
    keeps the best final MSE; (0, 0) reproduces the vanilla run exactly.
    """
    seeds = [int(s) for s in seeds]
    params = {
        "lr": lr, "max_epochs": max_epochs, "patience": patience, "hidden_dim": hidden_dim,
        "depth": depth, "ab_grid": [tuple(p) for p in ab_grid], "sample_s": sample_s,
        "strategy": strategy.value, "clamp": clamp,
    }
    payloads = [(ds, k.value if isinstance(k, FilterKind) else str(k), seed, params)
                for k in filters for seed in seeds]
    rows = [row for chunk in _map_tasks(_filter_fitting_task, payloads, threads) for row in chunk]
    config = dict(params, filters=[FilterKind(p[1]).value for p in payloads[:: len(seeds)]],
                  dataset=_dataset_summary(ds))
    return ExperimentReport(
        name="filter-fitting", config=config, seeds=seeds, rows=rows,
        aggregates=_aggregate_filter_fitting(rows),
    )


# ---------------------------------------------------------------------------
# frequency-band accuracy
# ---------------------------------------------------------------------------


def _band_task(payload) -> list[dict]:
    ds, projected, band, lam_lo, lam_hi, seeds, params = payload
    rows = []
    for seed in seeds:
        cfg = TrainConfig(
            lr=params["lr"], max_epochs=params["max_epochs"], patience=params["patience"],
            hidden_dim=params["hidden_dim"], depth=params["depth"], seed=seed, backbone="mlp",
        )
        projected_ds = Dataset(graph=ds.graph, features=projected, labels=ds.labels,
                               num_classes=ds.num_classes)
        result = train(projected_ds, cfg)
        rows.append({
            "band": band, "lam_lo": lam_lo, "lam_hi": lam_hi,
            "lam_center": 0.5 * (lam_lo + lam_hi), "seed": seed,
            "accuracy": result.test_accuracy,
        })
    return rows


def _aggregate_band(rows) -> dict:
    out = {}
    for (band,), values in sorted(_group_rows(rows, ("band",)).items()):
        out[f"band{band}"] = _median_iqr(values)
    return out


def run_band_accuracy(
    ds: Dataset,
    seeds,
    window: int | None = None,
    lr: float = 0.01,
    max_epochs: int = 200,
    patience: int = 20,
    hidden_dim: int = 32,
    depth: int = 2,
    threads: int = 1,
) -> ExperimentReport:
    """Classification accuracy of an MLP on successive eigencomponent bands."""
    seeds = [int(s) for s in seeds]
    window = int(window) if window else max(1, math.ceil(ds.n / 10))
    es = eig_sym(laplacian(ds.graph, LaplacianKind.SYM_NORMALIZED))
    params = {"lr": lr, "max_epochs": max_epochs, "patience": patience,
              "hidden_dim": hidden_dim, "depth": depth}
    payloads = []
    for band, start in enumerate(range(0, ds.n, window)):
        count = min(window, ds.n - start)
        projected = band_select(es, ds.features, "window", (start, count))
        lam_lo = float(es.eigenvalues[start])
        lam_hi = float(es.eigenvalues[start + count - 1])
        payloads.append((ds, projected, band, lam_lo, lam_hi, seeds, params))
    rows = [row for chunk in _map_tasks(_band_task, payloads, threads) for row in chunk]
    config = dict(params, window=window, dataset=_dataset_summary(ds))
    return ExperimentReport(
        name="band-accuracy", config=config, seeds=seeds, rows=rows, aggregates=_aggregate_band(rows),
    )


# ---------------------------------------------------------------------------
# over-smoothing across depths
# ---------------------------------------------------------------------------


def oversmoothing_variants(ab_grid=None) -> list[Variant]:
    grid = tuple(ab_grid) if ab_grid is not None else (
        (0.0, 0.0), (0.1, 0.1), (0.5, 0.5), (1.0, 1.0), (0.0, 0.5), (0.5, 0.0))
    node1 = SampleStrategy(SampleKind.NODE_BASED, 1)
    return [
        Variant(name="gcn"),
        Variant(name="gcn+clar1", reg=RegularizerSpec(kind=RegKind.CLAR, clamp_hi=1.0, strategy=node1), ab_grid=grid),
        Variant(name="gcn+clar10", reg=RegularizerSpec(kind=RegKind.CLAR, clamp_hi=10.0, strategy=node1), ab_grid=grid),
        Variant(name="gcn+dropedge", reg=RegularizerSpec(kind=RegKind.DROPEDGE, drop_rate=0.2)),
        Variant(name="gcn+madreg", reg=RegularizerSpec(kind=RegKind.MADREG, gamma=0.5, clamp_hi=10.0)),
        Variant(name="mlp", backbone="mlp"),
    ]


def _oversmoothing_task(payload) -> dict:
    ds, variant, depth, seed, params, split = payload
    cfg = TrainConfig(
        lr=params["lr"], max_epochs=params["max_epochs"], patience=params["patience"],
        hidden_dim=params["hidden_dim"], depth=depth, seed=seed, split=split,
    )
    out = _train_variant(ds, variant, cfg)
    return {"depth": depth, "variant": variant.name, "seed": seed,
            "accuracy": out["accuracy"], "alpha": out["alpha"], "beta": out["beta"]}


def _aggregate_by_variant(rows, axis: str) -> dict:
    out = {}
    for (variant, pos), values in sorted(_group_rows(rows, ("variant", axis)).items()):
        out[f"{variant}@{axis}={pos}"] = _median_iqr(values)
    return out


def _aggregate_oversmoothing(rows) -> dict:
    return _aggregate_by_variant(rows, "depth")


def run_oversmoothing(
    ds: Dataset,
    seeds,
    depths=(2, 4, 8),
    variants: list[Variant] | None = None,
    split: SplitSpec | None = None,
    lr: float = 0.01,
    max_epochs: int = 200,
    patience: int = 20,
    hidden_dim: int = 16,
    threads: int = 1,
) -> ExperimentReport:
    """Test accuracy as depth grows, per regularizer arm, on fixed-count splits."""
    seeds = [int(s) for s in seeds]
    variants = variants if variants is not None else oversmoothing_variants()
    split = split or _desk_planetoid(ds)
    params = {"lr": lr, "max_epochs": max_epochs, "patience": patience, "hidden_dim": hidden_dim}
    payloads = [(ds, v, int(d), seed, params, split) for d in depths for v in variants for seed in seeds]
    rows = _map_tasks(_oversmoothing_task, payloads, threads)
    config = dict(params, depths=[int(d) for d in depths], split=split.to_json(),
                  variants=[v.name for v in variants], dataset=_dataset_summary(ds))
    return ExperimentReport(
        name="oversmoothing", config=config, seeds=seeds, rows=rows,
        aggregates=_aggregate_oversmoothing(rows),
    )


def _desk_planetoid(ds: Dataset) -> SplitSpec:
    # scale the fixed-count split to what the dataset can hold
    per_class = min(20, ds.n // (5 * ds.num_classes) or 1)
    rest = ds.n - per_class * ds.num_classes
    val = max(1, rest // 3)
    test = max(1, rest - val - max(1, rest // 10))
    return SplitSpec.planetoid(per_class, val, test)


# ---------------------------------------------------------------------------
# robustness to removed edges
# ---------------------------------------------------------------------------


def robustness_variants(ab_grid=None) -> list[Variant]:
    grid = tuple(ab_grid) if ab_grid is not None else ((0.0, 0.0), (0.5, 0.5), (1.0, 1.0), (0.0, 1.0), (1.0, 0.0))
    node1 = SampleStrategy(SampleKind.NODE_BASED, 1)
    return [
        Variant(name="gcn"),
        Variant(name="gcn+clar", reg=RegularizerSpec(kind=RegKind.CLAR, clamp_hi=1.0, strategy=node1), ab_grid=grid),
        Variant(name="gcn+clar_x10", reg=RegularizerSpec(kind=RegKind.CLAR, clamp_hi=10.0, strategy=node1), ab_grid=grid),
    ]


def _robustness_task(payload) -> dict:
    ds, variant, rate, seed, params, split = payload
    reduced = remove_random_edges(ds, rate, np.random.default_rng([seed, int(round(rate * 100))]))
    cfg = TrainConfig(
        lr=params["lr"], max_epochs=params["max_epochs"], patience=params["patience"],
        hidden_dim=params["hidden_dim"], depth=params["depth"], seed=seed, split=split,
    )
    out = _train_variant(reduced, variant, cfg)
    return {"rate": rate, "variant": variant.name, "seed": seed,
            "accuracy": out["accuracy"], "alpha": out["alpha"], "beta": out["beta"]}


def _aggregate_robustness(rows) -> dict:
    return _aggregate_by_variant(rows, "rate")


def run_robustness(
    ds: Dataset,
    seeds,
    drop_rates=tuple(round(0.1 * k, 1) for k in range(10)),
    variants: list[Variant] | None = None,
    split: SplitSpec | None = None,
    lr: float = 0.01,
    max_epochs: int = 200,
    patience: int = 20,
    hidden_dim: int = 16,
    depth: int = 2,
    threads: int = 1,
) -> ExperimentReport:
    """Accuracy after removing a fraction of dataset edges before training.

    Removal happens once per (rate, seed) on the stored graph; this is not
    the per-epoch DropEdge regularizer.
    """
    seeds = [int(s) for s in seeds]
    variants = variants if variants is not None else robustness_variants()
    split = split or _desk_planetoid(ds)
    params = {"lr": lr, "max_epochs": max_epochs, "patience": patience,
              "hidden_dim": hidden_dim, "depth": depth}
    payloads = [(ds, v, float(r), seed, params, split) for r in drop_rates for v in variants for seed in seeds]
    rows = _map_tasks(_robustness_task, payloads, threads)
    config = dict(params, drop_rates=[float(r) for r in drop_rates], split=split.to_json(),
                  variants=[v.name for v in variants], dataset=_dataset_summary(ds))
    return ExperimentReport(
        name="robustness", config=config, seeds=seeds, rows=rows,
        aggregates=_aggregate_robustness(rows),
    )


# ---------------------------------------------------------------------------
# sampling studies: multiple S, node- vs edge-based
# ---------------------------------------------------------------------------


def _sampling_task(payload) -> dict:
    ds, study, strategy_value, s, alpha, beta, seed, params, split = payload
    reg = RegularizerSpec(
        kind=RegKind.CLAR, alpha=alpha, beta=beta, clamp_hi=params["clamp"],
        strategy=SampleStrategy(SampleKind(strategy_value), s),
    )
    cfg = TrainConfig(
        lr=params["lr"], max_epochs=params["max_epochs"], patience=params["patience"],
        hidden_dim=params["hidden_dim"], depth=params["depth"], seed=seed, split=split, reg=reg,
    )
    result = train(ds, cfg)
    return {"study": study, "strategy": strategy_value, "S": s, "alpha": alpha, "beta": beta,
            "seed": seed, "accuracy": result.test_accuracy}


def _aggregate_sampling(rows) -> dict:
    sp_rows = [r for r in rows if r["study"] == "spearman"]
    rho, degenerate = 0.0, True
    if sp_rows:
        rho, degenerate = spearman([r["S"] for r in sp_rows], [r["accuracy"] for r in sp_rows])
    out = {"spearman_rho": rho, "spearman_degenerate": degenerate}
    pe_rows = [r for r in rows if r["study"] == "pearson"]
    if pe_rows:
        vectors = {}
        for strategy in ("node", "edge"):
            groups = _group_rows(
                [r for r in pe_rows if r["strategy"] == strategy], ("alpha", "beta", "S"))
            vectors[strategy] = [float(np.median(groups[k])) for k in sorted(groups)]
        r = pearson(vectors["node"], vectors["edge"])
        out["pearson_r"] = 1.0 if r is None and vectors["node"] == vectors["edge"] else r
    return out


def run_sampling_studies(
    ds: Dataset,
    seeds,
    s_values=(1, 2, 4, 8, 16, 32),
    ab_grid=((0.0, 0.1), (0.1, 0.1), (1.0, 1.0)),
    pearson_s_values=(1, 2),
    alpha: float = 1.0,
    beta: float = 1.0,
    clamp: float = 1.0,
    split: SplitSpec | None = None,
    lr: float = 0.01,
    max_epochs: int = 200,
    patience: int = 20,
    hidden_dim: int = 16,
    depth: int = 2,
    threads: int = 1,
) -> ExperimentReport:
    """Sensitivity of accuracy to the sampling multiple and the strategy.

    Part one: rank correlation between S and accuracy (node-based, fixed
    alpha/beta). Part two: product-moment correlation between node- and
    edge-based accuracy over a shared (alpha, beta, S) grid, using per-cell
    medians across seeds.
    """
    seeds = [int(s) for s in seeds]
    split = split or SplitSpec.random_fraction()
    params = {"lr": lr, "max_epochs": max_epochs, "patience": patience,
              "hidden_dim": hidden_dim, "depth": depth, "clamp": clamp}
    payloads = []
    for s in s_values:
        for seed in seeds:
            payloads.append((ds, "spearman", "node", int(s), alpha, beta, seed, params, split))
    for strategy in ("node", "edge"):
        for a, b in ab_grid:
            for s in pearson_s_values:
                for seed in seeds:
                    payloads.append((ds, "pearson", strategy, int(s), float(a), float(b), seed, params, split))
    rows = _map_tasks(_sampling_task, payloads, threads)
    config = dict(params, s_values=[int(s) for s in s_values], ab_grid=[list(p) for p in ab_grid],
                  pearson_s_values=[int(s) for s in pearson_s_values], alpha=alpha, beta=beta,
                  split=split.to_json(), dataset=_dataset_summary(ds))
    return ExperimentReport(
        name="sampling-study", config=config, seeds=seeds, rows=rows,
        aggregates=_aggregate_sampling(rows),
    )


_AGGREGATORS = {
    "filter-fitting": _aggregate_filter_fitting,
    "band-accuracy": _aggregate_band,
    "oversmoothing": _aggregate_oversmoothing,
    "robustness": _aggregate_robustness,
    "sampling-study": _aggregate_sampling,
}
