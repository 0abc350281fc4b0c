"""Command-line interface.

Subcommands cover dataset generation, spectral utilities, complement
sampling, single training runs, and the five experiment runners. Experiment
commands write report.json + rows.csv (+ a PNG figure) into --out.

Exit codes: 0 success, 2 configuration/input error, 3 numerical failure.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from .datasets import SbmSpec, generate_sbm, load_dataset_dir, save_dataset
from .experiments import (
    run_band_accuracy,
    run_filter_fitting,
    run_oversmoothing,
    run_robustness,
    run_sampling_studies,
)
from .graphs import LaplacianKind, laplacian, read_edge_list, write_edge_list
from .sampling import SampleKind, SampleStrategy, sample_complement
from .spectral import FilterKind, apply_spectral_filter, artificial_filter, eig_sym
from .training import SplitSpec, TrainConfig, train

LAPLACIAN_KINDS = {
    "unnorm": LaplacianKind.UNNORMALIZED,
    "sym": LaplacianKind.SYM_NORMALIZED,
    "selfloop": LaplacianKind.SELF_LOOP_SYM_NORMALIZED,
}

FILTER_KINDS = {
    "highpass": FilterKind.HIGH_PASS,
    "lowpass": FilterKind.LOW_PASS,
    "bandpass": FilterKind.BAND_PASS,
    "bandreject": FilterKind.BAND_REJECT,
}


def _read_features(path) -> np.ndarray:
    from .datasets import read_features_csv

    return read_features_csv(path)


def _write_matrix_csv(m: np.ndarray, path) -> None:
    lines = [",".join(f"{x:.17g}" for x in row) for row in np.atleast_2d(m)]
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def _seed_list(args) -> list[int]:
    if args.seeds:
        return [int(s) for s in args.seeds.split(",") if s.strip() != ""]
    return list(range(args.seed, args.seed + args.num_seeds))


def _add_seed_fanout(p: argparse.ArgumentParser) -> None:
    p.add_argument("--seed", type=int, default=0, help="base seed")
    p.add_argument("--seeds", type=str, default="", help="explicit comma-separated seed list")
    p.add_argument("--num-seeds", type=int, default=10, help="number of seeds from the base seed")
    p.add_argument("--threads", type=int, default=1, help="worker processes for the seed fan-out")
    p.add_argument("--out", type=str, required=True, help="output directory")
    p.add_argument("--no-figures", action="store_true", help="skip PNG rendering")


def _emit_report(report, args) -> None:
    from .plotting import write_report

    paths = write_report(report, args.out, figures=not args.no_figures)
    for key in sorted(paths):
        print(f"{key}: {paths[key]}")


# -- subcommand handlers ------------------------------------------------------


def cmd_gen_sbm(args) -> None:
    spec = SbmSpec(
        n=args.n, num_classes=args.c, target_homophily=args.h, avg_degree=args.deg,
        feature_dim=args.d, feature_signal=args.signal, seed=args.seed,
        require_connected=not args.allow_disconnected,
    )
    ds = generate_sbm(spec)
    save_dataset(ds, args.out, meta={"seed": args.seed, "target_homophily": args.h,
                                     "avg_degree": args.deg, "feature_signal": args.signal})
    print(f"dataset: {args.out} (n={ds.n}, edges={ds.graph.num_edges})")


def cmd_spectrum(args) -> None:
    g = read_edge_list(args.graph, n=args.n)
    es = eig_sym(laplacian(g, LAPLACIAN_KINDS[args.kind]))
    lines = ["index,eigenvalue"] + [f"{i},{lam:.17g}" for i, lam in enumerate(es.eigenvalues)]
    Path(args.out).write_text("\n".join(lines) + "\n", encoding="utf-8")
    print(f"spectrum: {args.out} ({g.n} components)")


def cmd_filter_signal(args) -> None:
    g = read_edge_list(args.graph, n=args.n)
    x = _read_features(args.features)
    h = artificial_filter(FILTER_KINDS[args.filter])
    out = apply_spectral_filter(g, LAPLACIAN_KINDS[args.kind], x, h)
    _write_matrix_csv(out, args.out)
    print(f"filtered signal: {args.out}")


def cmd_sample_complement(args) -> None:
    g = read_edge_list(args.graph, n=args.n)
    strategy = SampleStrategy(SampleKind(args.strategy), args.s)
    out = sample_complement(g, strategy, args.seed)
    write_edge_list(out.graph, args.out)
    print(f"sampled complement: {args.out} ({out.graph.num_edges} edges)")


def cmd_train(args) -> None:
    cfg_dict = json.loads(Path(args.config).read_text(encoding="utf-8"))
    cfg = TrainConfig.from_json(cfg_dict)
    if args.seed is not None:
        cfg.seed = args.seed
    ds = load_dataset_dir(args.data)
    result = train(ds, cfg)
    payload = json.dumps(result.metrics_json(cfg), indent=2, sort_keys=True) + "\n"
    Path(args.out).write_text(payload, encoding="utf-8")
    print(f"train: {args.out} (test accuracy {result.test_accuracy:.4f})")


def cmd_fit_filters(args) -> None:
    ds = load_dataset_dir(args.data)
    filters = [FILTER_KINDS[f] for f in args.filters.split(",")] if args.filters else list(FILTER_KINDS.values())
    report = run_filter_fitting(
        ds, _seed_list(args), filters=filters, lr=args.lr, max_epochs=args.max_epochs,
        patience=args.patience, hidden_dim=args.hidden_dim, sample_s=args.s, clamp=args.clamp,
        threads=args.threads,
    )
    _emit_report(report, args)


def cmd_band_accuracy(args) -> None:
    ds = load_dataset_dir(args.data)
    report = run_band_accuracy(
        ds, _seed_list(args), window=args.window or None, lr=args.lr,
        max_epochs=args.max_epochs, patience=args.patience, hidden_dim=args.hidden_dim,
        threads=args.threads,
    )
    _emit_report(report, args)


def cmd_oversmoothing(args) -> None:
    ds = load_dataset_dir(args.data)
    depths = [int(d) for d in args.depths.split(",")]
    report = run_oversmoothing(
        ds, _seed_list(args), depths=depths, lr=args.lr, max_epochs=args.max_epochs,
        patience=args.patience, hidden_dim=args.hidden_dim, threads=args.threads,
    )
    _emit_report(report, args)


def cmd_robustness(args) -> None:
    ds = load_dataset_dir(args.data)
    rates = [float(r) for r in args.rates.split(",")]
    report = run_robustness(
        ds, _seed_list(args), drop_rates=rates, lr=args.lr, max_epochs=args.max_epochs,
        patience=args.patience, hidden_dim=args.hidden_dim, depth=args.depth,
        threads=args.threads,
    )
    _emit_report(report, args)


def cmd_sampling_study(args) -> None:
    ds = load_dataset_dir(args.data)
    s_values = [int(s) for s in args.s_values.split(",")]
    report = run_sampling_studies(
        ds, _seed_list(args), s_values=s_values, lr=args.lr, max_epochs=args.max_epochs,
        patience=args.patience, hidden_dim=args.hidden_dim, depth=args.depth,
        threads=args.threads,
    )
    _emit_report(report, args)


# -- parser -------------------------------------------------------------------


def _train_knobs(p: argparse.ArgumentParser, lr: float, epochs: int, patience: int, hidden: int) -> None:
    p.add_argument("--lr", type=float, default=lr)
    p.add_argument("--max-epochs", type=int, default=epochs)
    p.add_argument("--patience", type=int, default=patience)
    p.add_argument("--hidden-dim", type=int, default=hidden)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="clarkit", description=__doc__,
                                     formatter_class=argparse.RawDescriptionHelpFormatter)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gen-sbm", help="generate a block-model dataset directory")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--c", type=int, required=True, help="number of classes")
    p.add_argument("--h", type=float, required=True, help="target homophily ratio")
    p.add_argument("--deg", type=float, required=True, help="average degree")
    p.add_argument("--d", type=int, required=True, help="feature dimension")
    p.add_argument("--signal", type=float, default=1.0, help="class-mean separation")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--allow-disconnected", action="store_true")
    p.add_argument("--out", type=str, required=True)
    p.set_defaults(fn=cmd_gen_sbm)

    p = sub.add_parser("spectrum", help="eigenvalues of a graph Laplacian as CSV")
    p.add_argument("--graph", type=str, required=True)
    p.add_argument("--n", type=int, default=None)
    p.add_argument("--kind", choices=sorted(LAPLACIAN_KINDS), default="sym")
    p.add_argument("--out", type=str, required=True)
    p.set_defaults(fn=cmd_spectrum)

    p = sub.add_parser("filter-signal", help="apply a named filter to a feature CSV")
    p.add_argument("--graph", type=str, required=True)
    p.add_argument("--n", type=int, default=None)
    p.add_argument("--features", type=str, required=True)
    p.add_argument("--filter", choices=sorted(FILTER_KINDS), required=True)
    p.add_argument("--kind", choices=sorted(LAPLACIAN_KINDS), default="sym")
    p.add_argument("--out", type=str, required=True)
    p.set_defaults(fn=cmd_filter_signal)

    p = sub.add_parser("sample-complement", help="sample the complement of a graph")
    p.add_argument("--graph", type=str, required=True)
    p.add_argument("--n", type=int, default=None)
    p.add_argument("--strategy", choices=["node", "edge"], required=True)
    p.add_argument("--s", type=int, default=1)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", type=str, required=True)
    p.set_defaults(fn=cmd_sample_complement)

    p = sub.add_parser("train", help="one training run from a JSON config")
    p.add_argument("--config", type=str, required=True)
    p.add_argument("--data", type=str, required=True)
    p.add_argument("--seed", type=int, default=None, help="override the config seed")
    p.add_argument("--out", type=str, required=True)
    p.set_defaults(fn=cmd_train)

    p = sub.add_parser("fit-filters", help="artificial-filter fitting study")
    p.add_argument("--data", type=str, required=True)
    p.add_argument("--filters", type=str, default="", help="comma list, default all four")
    p.add_argument("--s", type=int, default=1)
    p.add_argument("--clamp", type=float, default=1.0)
    _train_knobs(p, lr=0.1, epochs=1000, patience=50, hidden=32)
    _add_seed_fanout(p)
    p.set_defaults(fn=cmd_fit_filters)

    p = sub.add_parser("band-accuracy", help="accuracy per frequency band")
    p.add_argument("--data", type=str, required=True)
    p.add_argument("--window", type=int, default=0, help="band width, default ceil(n/10)")
    _train_knobs(p, lr=0.01, epochs=200, patience=20, hidden=32)
    _add_seed_fanout(p)
    p.set_defaults(fn=cmd_band_accuracy)

    p = sub.add_parser("oversmoothing", help="accuracy across depths and regularizers")
    p.add_argument("--data", type=str, required=True)
    p.add_argument("--depths", type=str, default="2,4,8")
    _train_knobs(p, lr=0.01, epochs=200, patience=20, hidden=16)
    _add_seed_fanout(p)
    p.set_defaults(fn=cmd_oversmoothing)

    p = sub.add_parser("robustness", help="accuracy after removing dataset edges")
    p.add_argument("--data", type=str, required=True)
    p.add_argument("--rates", type=str, default="0.0,0.1,0.2,0.3,0.4,0.5,0.6,0.7,0.8,0.9")
    p.add_argument("--depth", type=int, default=2)
    _train_knobs(p, lr=0.01, epochs=200, patience=20, hidden=16)
    _add_seed_fanout(p)
    p.set_defaults(fn=cmd_robustness)

    p = sub.add_parser("sampling-study", help="sensitivity to S and sampling strategy")
    p.add_argument("--data", type=str, required=True)
    p.add_argument("--s-values", type=str, default="1,2,4,8,16,32")
    p.add_argument("--depth", type=int, default=2)
    _train_knobs(p, lr=0.01, epochs=200, patience=20, hidden=16)
    _add_seed_fanout(p)
    p.set_defaults(fn=cmd_sampling_study)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        args.fn(args)
    except FloatingPointError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return 3
    except np.linalg.LinAlgError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return 3
    except (ValueError, OSError, KeyError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
