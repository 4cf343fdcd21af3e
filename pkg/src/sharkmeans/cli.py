"""Command line entry point: ``sharkmeans {fit,bench,gen,lambda}``."""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

import numpy as np

from .baselines import lambda_fallback, lambda_stability_scores
from .core import normalize
from .harness import (
    ALGORITHMS,
    CRITERIA,
    DEFAULT_NORMALIZATION,
    EXIT_DATASET_ERROR,
    EXIT_OK,
    REPORT_FORMATS,
    DatasetSpec,
    ExperimentConfig,
    LwSettings,
    emit_report,
    fit_algorithm,
    load_config,
    load_csv,
    render_markdown,
    run_experiment,
    save_csv,
)
from .metrics import ari
from .synth import SynthConfig, make_dataset, parse_config_name

NORMALIZE_CHOICES = ("range", "zscore", "none")


def _load_dataset(args):
    """(X, truth, name) from a synthetic configuration name or a CSV path."""
    try:
        cfg = parse_config_name(args.dataset, seed=args.seed)
    except ValueError:
        label_col = None if args.label_column == "none" else int(args.label_column)
        X, truth = load_csv(args.dataset, args.header, label_col)
        return X, truth, Path(args.dataset).stem
    if args.noise_fraction is not None and cfg.noise_fraction == 0.0:
        cfg = SynthConfig(cfg.n, cfg.m, cfg.k, args.noise_fraction, cfg.min_cluster_size, args.seed)
    ds = make_dataset(cfg)
    return ds.X, ds.truth, cfg.name


def _resolve_k(args, truth) -> int:
    if args.k is not None:
        return args.k
    if truth is None:
        raise SystemExit("error: --k is required when the dataset has no label column")
    return int(truth.max()) + 1


def cmd_fit(args) -> int:
    X, truth, name = _load_dataset(args)
    k = _resolve_k(args, truth)
    method = args.normalize or DEFAULT_NORMALIZATION[args.algorithm]
    Xn = normalize(X, method)
    lw = LwSettings(lam=args.lam if args.lam is not None else LwSettings().lam)
    mode = "fixed" if args.lam is not None else "fallback"
    model, lam = fit_algorithm(args.algorithm, Xn, k, np.random.default_rng(args.seed), lw, lam_mode=mode)
    summary = {
        "dataset": name,
        "algorithm": args.algorithm,
        "normalization": method,
        "k": k,
        "failed": model.failed,
        "converged": model.converged,
        "iterations": model.iterations,
        "objective": None if model.failed else model.objective,
        "weights": None if model.weights is None else model.weights.tolist(),
    }
    if lam is not None:
        summary["lambda"] = lam
    if truth is not None and not model.failed:
        summary["ari"] = ari(truth, model.labels)
    if model.failed:
        summary["reason"] = model.reason
    if args.out and model.labels is not None:
        Path(args.out).write_text("\n".join(str(int(v)) for v in model.labels) + "\n", encoding="utf-8")
    elif not args.out:
        summary["labels"] = None if model.labels is None else model.labels.tolist()
    print(json.dumps(summary, indent=2))
    return EXIT_OK if not model.failed else 1


def _bench_config(args) -> ExperimentConfig:
    if args.config:
        cfg = load_config(args.config)
        overrides = {}
        if args.runs is not None:
            overrides["runs"] = args.runs
        if args.seed is not None:
            overrides["base_seed"] = args.seed
        if overrides:
            cfg = ExperimentConfig.from_mapping({**cfg.to_mapping(), **overrides})
    else:
        if not args.dataset:
            raise SystemExit("error: bench needs --config or at least one --dataset")
        seed = args.seed or 0
        specs = [DatasetSpec.parse(d, count=args.count, seed=seed, noise_fraction=args.noise_fraction) for d in args.dataset]
        cfg = ExperimentConfig(
            datasets=specs,
            algorithms=args.algorithm or list(ALGORITHMS),
            runs=args.runs or 25,
            base_seed=seed,
            criterion=args.criterion,
        )
    if args.normalize:
        cfg.normalization = {a: args.normalize for a in cfg.normalization}
    if args.workers is not None:
        cfg.workers = args.workers
    return cfg


def cmd_bench(args) -> int:
    cfg = _bench_config(args)
    report = run_experiment(cfg)
    out = args.out or cfg.output
    fmt = args.format or cfg.format
    if out:
        emit_report(report, out, fmt)
        print(f"wrote {fmt} report to {out}")
    else:
        sys.stdout.write(render_markdown(report))
    for name, err in report.errors.items():
        print(f"dataset {name} aborted: {err}", file=sys.stderr)
    return EXIT_DATASET_ERROR if report.errors else EXIT_OK


def cmd_gen(args) -> int:
    if args.name:
        base = parse_config_name(args.name, seed=args.seed)
        if args.noise_fraction is not None:
            base = SynthConfig(base.n, base.m, base.k, args.noise_fraction, base.min_cluster_size, args.seed)
    else:
        if None in (args.n, args.m, args.k):
            raise SystemExit("error: gen needs a configuration name or all of --n, --m, --k")
        base = SynthConfig(args.n, args.m, args.k, args.noise_fraction or 0.0, seed=args.seed)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    for j in range(args.count):
        cfg = base.with_seed(base.seed + j)
        ds = make_dataset(cfg)
        path = out / f"{cfg.name}_seed{cfg.seed}.csv"
        save_csv(path, ds.X, ds.truth)
        print(path)
    return EXIT_OK


def cmd_lambda(args) -> int:
    X, truth, name = _load_dataset(args)
    k = _resolve_k(args, truth)
    Xn = normalize(X, args.normalize or "range")
    grid, scores = lambda_stability_scores(
        Xn, k, args.grid_size, args.runs_per_lambda, rng=np.random.default_rng(args.seed)
    )
    if np.all(np.isnan(scores)):
        lam = lambda_fallback(Xn, k, rng=np.random.default_rng(args.seed))
        print(json.dumps({"dataset": name, "lambda": lam, "fallback": True}, indent=2))
        return EXIT_OK
    best = int(np.nanargmax(scores))
    print(
        json.dumps(
            {
                "dataset": name,
                "lambda": float(grid[best]),
                "stability": float(scores[best]),
                "grid": [float(g) for g in grid],
                "scores": [None if np.isnan(s) else float(s) for s in scores],
            },
            indent=2,
        )
    )
    return EXIT_OK


def _dataset_args(p: argparse.ArgumentParser) -> None:
    p.add_argument("--dataset", required=True, help="CSV path or synthetic name such as 1000x10-3k+5NF")
    p.add_argument("--k", type=int, help="number of clusters (default: number of distinct labels)")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--normalize", choices=NORMALIZE_CHOICES)
    p.add_argument("--noise-fraction", type=float, help="noise features per informative feature (synthetic only)")
    p.add_argument("--header", action="store_true", help="CSV has a header row")
    p.add_argument("--label-column", default="-1", help="label column index, or 'none' (default: -1)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="sharkmeans", description="Feature-weighted k-means benchmarks.")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("fit", help="fit one algorithm on one dataset")
    _dataset_args(p)
    p.add_argument("--algorithm", choices=ALGORITHMS, default="shark")
    p.add_argument("--lambda", dest="lam", type=float, help="LW lambda (default: 0.005 with decade fallback)")
    p.add_argument("--out", help="write labels here, one per line")
    p.set_defaults(func=cmd_fit)

    p = sub.add_parser("bench", help="run a benchmark experiment")
    p.add_argument("--config", help="YAML or JSON experiment configuration")
    p.add_argument("--dataset", action="append", help="CSV path or synthetic name; repeatable")
    p.add_argument("--count", type=int, default=1, help="datasets per synthetic configuration")
    p.add_argument("--algorithm", action="append", choices=ALGORITHMS)
    p.add_argument("--runs", type=int)
    p.add_argument("--seed", type=int)
    p.add_argument("--normalize", choices=NORMALIZE_CHOICES, help="override every algorithm's normalization")
    p.add_argument("--noise-fraction", type=float)
    p.add_argument("--criterion", choices=CRITERIA, default="own")
    p.add_argument("--workers", type=int)
    p.add_argument("--out")
    p.add_argument("--format", choices=REPORT_FORMATS)
    p.set_defaults(func=cmd_bench)

    p = sub.add_parser("gen", help="write synthetic datasets to CSV (labels in the last column)")
    p.add_argument("name", nargs="?", help="configuration name such as 2000x20-10k")
    p.add_argument("--n", type=int)
    p.add_argument("--m", type=int)
    p.add_argument("--k", type=int)
    p.add_argument("--noise-fraction", type=float)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--count", type=int, default=1)
    p.add_argument("--out", default=".")
    p.set_defaults(func=cmd_gen)

    p = sub.add_parser("lambda", help="LW-k-means lambda stability selection")
    _dataset_args(p)
    p.add_argument("--grid-size", type=int, default=20)
    p.add_argument("--runs-per-lambda", type=int, default=10)
    p.set_defaults(func=cmd_lambda)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        return args.func(args)
    except (OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DATASET_ERROR


if __name__ == "__main__":
    sys.exit(main())
