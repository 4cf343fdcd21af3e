"""Benchmark harness: dataset ingestion, seeded batch runs, aggregation and reports."""

from __future__ import annotations

import csv
import datetime as _dt
import json
import logging
import math
import os
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Any, Iterable

import numpy as np
import yaml

from . import __version__
from .baselines import (
    DEFAULT_BETA,
    DEFAULT_START_LAMBDA,
    LambdaSearchError,
    LwParams,
    fit_lw_with_fallback,
    lambda_stability_select,
    run_fwsa,
    run_lw,
)
from .core import as_data_matrix, normalize
from .lloyd import ClusterModel, InitMethod, kmeans_objective, run_kmeans
from .metrics import AggregateResult, AllRunsFailedError, RunRecord, ari, best_of_runs, mean_relative_rank
from .shark import run_shark
from .synth import LabeledDataset, SynthConfig, make_dataset, parse_config_name

log = logging.getLogger(__name__)

ALGORITHMS = ("kmeans_pp", "fwsa", "lw", "shark")
ALGORITHM_LABELS = {"kmeans_pp": "k-means++", "fwsa": "FWSA", "lw": "LW-k-means", "shark": "SHARK"}
# stable per-algorithm stream ids: runs of different algorithms never share a seed stream
_STREAM_ID = {"kmeans_pp": 1, "fwsa": 2, "lw": 3, "shark": 4, "lambda": 5}
DEFAULT_NORMALIZATION = {"kmeans_pp": "range", "fwsa": "zscore", "lw": "range", "shark": "range"}
LAMBDA_MODES = ("auto", "fixed", "fallback", "stability")
CRITERIA = ("own", "kmeans")
REPORT_FORMATS = ("csv", "json", "markdown")
WORKERS_ENV = "SHARKMEANS_WORKERS"

EXIT_OK = 0
EXIT_DATASET_ERROR = 3


# ------------------------------------------------------------------ CSV input


class CsvFormatError(ValueError):
    def __init__(self, path, line: int, message: str):
        super().__init__(f"{path}:{line}: {message}")
        self.path = str(path)
        self.line = line


class EmptyFileError(CsvFormatError):
    pass


class RaggedRowError(CsvFormatError):
    pass


class NonNumericCellError(CsvFormatError):
    pass


def load_csv(path, has_header: bool = False, label_column: int | None = None):
    """Read a comma-separated numeric table.

    ``label_column`` (negative indices allowed) is split off and factorised to
    ``0..k-1`` in order of first appearance. Returns ``(X, labels)``, where
    ``labels`` is None when no label column is given.
    """
    path = Path(path)
    with path.open(newline="", encoding="utf-8") as fh:
        rows = [(i, row) for i, row in enumerate(csv.reader(fh), start=1) if any(c.strip() for c in row)]
    if has_header and rows:
        rows = rows[1:]
    if not rows:
        raise EmptyFileError(path, 1, "no data rows")
    width = len(rows[0][1])
    label_idx = None
    if label_column is not None:
        label_idx = label_column % width if -width <= label_column < width else None
        if label_idx is None:
            raise CsvFormatError(path, rows[0][0], f"label column {label_column} out of range for {width} columns")
    if width - (label_idx is not None) < 1:
        raise CsvFormatError(path, rows[0][0], "no feature columns")
    values, raw_labels = [], []
    for line, row in rows:
        if len(row) != width:
            raise RaggedRowError(path, line, f"expected {width} fields, found {len(row)}")
        feats = []
        for j, cell in enumerate(row):
            if j == label_idx:
                raw_labels.append(cell.strip())
                continue
            try:
                v = float(cell)
            except ValueError:
                raise NonNumericCellError(path, line, f"column {j + 1}: {cell!r} is not a number") from None
            if not math.isfinite(v):
                raise NonNumericCellError(path, line, f"column {j + 1}: non-finite value {cell!r}")
            feats.append(v)
        values.append(feats)
    X = np.array(values, dtype=np.float64)
    if label_idx is None:
        return X, None
    codes: dict[str, int] = {}
    labels = np.array([codes.setdefault(s, len(codes)) for s in raw_labels], dtype=np.intp)
    return X, labels


def save_csv(path, X, labels=None, header: Iterable[str] | None = None) -> None:
    """Write ``X`` (plus a trailing integer label column) with full float precision."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        if header is not None:
            writer.writerow(list(header))
        for i, row in enumerate(np.asarray(X)):
            cells = [repr(float(v)) for v in row]
            if labels is not None:
                cells.append(str(int(labels[i])))
            writer.writerow(cells)


# -------------------------------------------------------------- configuration


@dataclass
class DatasetSpec:
    """A file on disk or ``count`` synthetic datasets drawn from one configuration."""

    name: str = ""
    path: str | None = None
    has_header: bool = False
    label_column: int | None = -1
    k: int | None = None
    synthetic: SynthConfig | None = None
    count: int = 1

    def __post_init__(self):
        if (self.path is None) == (self.synthetic is None):
            raise ValueError("a dataset needs exactly one of 'path' or 'synthetic'")
        if self.count < 1:
            raise ValueError("count must be >= 1")
        if not self.name:
            self.name = self.synthetic.name if self.synthetic is not None else Path(self.path).stem

    @property
    def is_synthetic(self) -> bool:
        return self.synthetic is not None

    @classmethod
    def parse(cls, text: str, count: int = 1, seed: int = 0, noise_fraction: float | None = None) -> "DatasetSpec":
        """A synthetic name such as ``1000x10-3k+5NF``, otherwise a CSV path with trailing labels."""
        try:
            synth = parse_config_name(text, seed=seed)
        except ValueError:
            return cls(path=text)
        if noise_fraction is not None and synth.noise_fraction == 0.0:
            synth = SynthConfig(synth.n, synth.m, synth.k, noise_fraction, synth.min_cluster_size, seed)
        return cls(synthetic=synth, count=count)

    @classmethod
    def from_mapping(cls, d: dict) -> "DatasetSpec":
        d = dict(d)
        synth = d.pop("synthetic", None)
        if isinstance(synth, str):
            synth = parse_config_name(synth, seed=int(d.pop("seed", 0)))
        elif isinstance(synth, dict):
            synth = SynthConfig(**synth)
        return cls(synthetic=synth, **d)

    def to_mapping(self) -> dict:
        out = asdict(self)
        if self.synthetic is not None:
            out["synthetic"] = asdict(self.synthetic)
        return out


@dataclass
class LwSettings:
    beta: float = DEFAULT_BETA
    alpha: float | None = None
    lambda_mode: str = "auto"
    lam: float = DEFAULT_START_LAMBDA
    start_lambda: float = DEFAULT_START_LAMBDA
    grid_size: int = 20
    runs_per_lambda: int = 10

    def __post_init__(self):
        if self.lambda_mode not in LAMBDA_MODES:
            raise ValueError(f"lambda_mode must be one of {LAMBDA_MODES}")

    def params(self, lam: float) -> LwParams:
        return LwParams(lam=lam, alpha=self.alpha, beta=self.beta)


@dataclass
class ExperimentConfig:
    datasets: list[DatasetSpec]
    algorithms: list[str] = field(default_factory=lambda: list(ALGORITHMS))
    runs: int = 25
    base_seed: int = 0
    normalization: dict[str, str] = field(default_factory=dict)
    lw: LwSettings = field(default_factory=LwSettings)
    criterion: str = "own"
    output: str | None = None
    format: str = "markdown"
    workers: int | None = None

    def __post_init__(self):
        if self.runs < 1:
            raise ValueError("runs must be >= 1")
        if not self.algorithms:
            raise ValueError("at least one algorithm is required")
        unknown = set(self.algorithms) - set(ALGORITHMS)
        if unknown:
            raise ValueError(f"unknown algorithms {sorted(unknown)}; choose from {ALGORITHMS}")
        if self.base_seed < 0:
            raise ValueError("base_seed must be >= 0")
        if self.criterion not in CRITERIA:
            raise ValueError(f"criterion must be one of {CRITERIA}")
        if self.format not in REPORT_FORMATS:
            raise ValueError(f"format must be one of {REPORT_FORMATS}")
        self.normalization = {**DEFAULT_NORMALIZATION, **self.normalization}

    @classmethod
    def from_mapping(cls, d: dict) -> "ExperimentConfig":
        d = dict(d)
        d["datasets"] = [DatasetSpec.from_mapping(x) for x in d.get("datasets", [])]
        if "lw" in d:
            d["lw"] = LwSettings(**d["lw"])
        return cls(**d)

    def to_mapping(self) -> dict:
        out = asdict(self)
        out["datasets"] = [ds.to_mapping() for ds in self.datasets]
        return out


def load_config(path) -> ExperimentConfig:
    """Read an experiment configuration from a YAML (or JSON) document."""
    with open(path, encoding="utf-8") as fh:
        data = yaml.safe_load(fh)
    if not isinstance(data, dict):
        raise ValueError(f"{path}: configuration must be a mapping")
    return ExperimentConfig.from_mapping(data)


# -------------------------------------------------------------------- running


def run_rng(base_seed: int, run: int, algorithm: str) -> np.random.Generator:
    """Independent stream for run ``run`` of ``algorithm``; unaffected by other runs."""
    return np.random.default_rng([_STREAM_ID[algorithm], base_seed + run])


def fit_algorithm(
    algorithm: str,
    X: np.ndarray,
    k: int,
    rng,
    lw: LwSettings | None = None,
    lam: float | None = None,
    lam_mode: str = "fixed",
) -> tuple[ClusterModel, float | None]:
    """Fit one algorithm; returns the model and the LW lambda actually used (else None)."""
    if algorithm == "kmeans_pp":
        return run_kmeans(X, k, InitMethod.KMEANSPP, rng), None
    if algorithm == "shark":
        return run_shark(X, k, InitMethod.UNIFORM, rng), None
    if algorithm == "fwsa":
        return run_fwsa(X, k, InitMethod.UNIFORM, rng), None
    if algorithm == "lw":
        lw = lw or LwSettings()
        if lam_mode == "fallback":
            try:
                used, model = fit_lw_with_fallback(X, k, lw.start_lambda, lw.params(0.0), rng=rng)
            except LambdaSearchError as exc:
                return ClusterModel(None, None, None, np.inf, 0, False, True, reason=str(exc)), None
            return model, used
        lam = lw.lam if lam is None else lam
        return run_lw(X, k, lw.params(lam), rng=rng), lam
    raise ValueError(f"unknown algorithm {algorithm!r}")


@dataclass
class Report:
    algorithms: list[str]
    rows: list[AggregateResult] = field(default_factory=list)
    records: list[RunRecord] = field(default_factory=list)
    mean_relative_rank: dict[str, float] = field(default_factory=dict)
    errors: dict[str, str] = field(default_factory=dict)
    provenance: dict[str, Any] = field(default_factory=dict)

    def row(self, dataset: str, algorithm: str) -> AggregateResult:
        for r in self.rows:
            if r.dataset == dataset and r.algorithm == algorithm:
                return r
        raise KeyError((dataset, algorithm))

    @property
    def datasets(self) -> list[str]:
        return list(dict.fromkeys(r.dataset for r in self.rows))


@dataclass
class _Job:
    instance: str
    algorithm: str
    X: np.ndarray
    truth: np.ndarray | None
    k: int
    runs: int
    base_seed: int
    lw: LwSettings
    lam_mode: str
    lam: float | None
    criterion: str


def _execute(job: _Job) -> list[RunRecord]:
    records = []
    for i in range(job.runs):
        rng = run_rng(job.base_seed, i, job.algorithm)
        t0 = time.perf_counter()
        model, lam = fit_algorithm(job.algorithm, job.X, job.k, rng, job.lw, job.lam, job.lam_mode)
        elapsed = time.perf_counter() - t0
        failed = model.failed or np.bincount(model.labels, minlength=job.k).min() == 0
        if failed:
            score, objective = float("nan"), float("inf")
        else:
            score = ari(job.truth, model.labels) if job.truth is not None else float("nan")
            objective = (
                kmeans_objective(job.X, model.labels, model.centroids) if job.criterion == "kmeans" else model.objective
            )
        records.append(
            RunRecord(
                algorithm=job.algorithm,
                dataset=job.instance,
                seed=job.base_seed + i,
                ari=float(score),
                objective=float(objective),
                failed=bool(failed),
                wall_time=elapsed,
                iterations=model.iterations,
                lam=lam,
            )
        )
    return records


def _instances(spec: DatasetSpec) -> list[LabeledDataset]:
    if spec.is_synthetic:
        out = []
        for j in range(spec.count):
            ds = make_dataset(spec.synthetic.with_seed(spec.synthetic.seed + j))
            ds.name = f"{spec.name}#{spec.synthetic.seed + j}"
            out.append(ds)
        return out
    X, labels = load_csv(spec.path, spec.has_header, spec.label_column)
    X = as_data_matrix(X)
    return [LabeledDataset(X=X, truth=labels, informative_mask=np.ones(X.shape[1], bool), name=spec.name)]


def _worker_count(cfg: ExperimentConfig) -> int:
    if cfg.workers is not None:
        return max(1, cfg.workers)
    env = os.environ.get(WORKERS_ENV)
    return max(1, int(env)) if env else 1


def _aggregate(spec: DatasetSpec, algorithm: str, records: list[RunRecord]) -> AggregateResult:
    by_instance: dict[str, list[RunRecord]] = {}
    for r in records:
        by_instance.setdefault(r.dataset, []).append(r)
    best = []
    for recs in by_instance.values():
        try:
            best.append(best_of_runs(recs).ari)
        except AllRunsFailedError:
            pass
    ok = [r.ari for r in records if not r.failed]
    return AggregateResult(
        dataset=spec.name,
        algorithm=algorithm,
        mean_ari=float(np.mean(best)) if best else float("nan"),
        std_ari=float(np.std(best)) if best else float("nan"),
        per_algorithm_rank=float("nan"),
        n_runs=len(records),
        n_failures=sum(r.failed for r in records),
        n_datasets=len(by_instance),
        run_mean_ari=float(np.mean(ok)) if ok else float("nan"),
        run_std_ari=float(np.std(ok)) if ok else float("nan"),
    )


def run_experiment(cfg: ExperimentConfig) -> Report:
    """Run every (dataset, algorithm) pair ``cfg.runs`` times and aggregate.

    For each dataset instance the run with the lowest objective supplies the ARI;
    ``mean_ari``/``std_ari`` summarise those best-of-runs scores over the instances
    of a dataset entry. Failed runs (any empty cluster) never contribute an ARI.
    A dataset that cannot be loaded is skipped and listed in ``Report.errors``.
    """
    report = Report(algorithms=list(cfg.algorithms))
    jobs: list[tuple[DatasetSpec, _Job]] = []
    for spec in cfg.datasets:
        try:
            instances = _instances(spec)
        except (OSError, ValueError) as exc:
            log.error("dataset %s skipped: %s", spec.name, exc)
            report.errors[spec.name] = f"{type(exc).__name__}: {exc}"
            continue
        mode = cfg.lw.lambda_mode
        if mode == "auto":
            mode = "fallback" if spec.is_synthetic else "stability"
        for ds in instances:
            k = spec.k or (ds.k if ds.truth is not None else None)
            if k is None:
                report.errors[spec.name] = "number of clusters unknown: give 'k' or a label column"
                break
            normalized: dict[str, np.ndarray] = {}
            for alg in cfg.algorithms:
                method = cfg.normalization[alg]
                if method not in normalized:
                    normalized[method] = normalize(ds.X, method)
                X = normalized[method]
                lam = None
                lam_mode = "fixed" if mode in ("fixed", "stability") else mode
                if alg == "lw" and mode == "stability":
                    lam = lambda_stability_select(
                        X,
                        k,
                        cfg.lw.grid_size,
                        cfg.lw.runs_per_lambda,
                        rng=np.random.default_rng([_STREAM_ID["lambda"], cfg.base_seed]),
                        params=cfg.lw.params(0.0),
                        start_lambda=cfg.lw.start_lambda,
                    )
                jobs.append(
                    (spec, _Job(ds.name, alg, X, ds.truth, k, cfg.runs, cfg.base_seed, cfg.lw, lam_mode, lam, cfg.criterion))
                )

    workers = _worker_count(cfg)
    if workers > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(_execute, [j for _, j in jobs]))
    else:
        results = [_execute(j) for _, j in jobs]

    grouped: dict[tuple[str, str], tuple[DatasetSpec, list[RunRecord]]] = {}
    for (spec, job), recs in zip(jobs, results):
        report.records.extend(recs)
        grouped.setdefault((spec.name, job.algorithm), (spec, []))[1].extend(recs)
    for (_, alg), (spec, recs) in grouped.items():
        report.rows.append(_aggregate(spec, alg, recs))

    _rank(report)
    report.provenance = {
        "config": cfg.to_mapping(),
        "library_version": __version__,
        "numpy_version": np.__version__,
        "seeding": "run i of algorithm a uses numpy default_rng([stream_id(a), base_seed + i]); "
        "algorithms draw independent initial centroids",
        "created": _dt.datetime.now(_dt.timezone.utc).isoformat(timespec="seconds"),
    }
    return report


def _rank(report: Report) -> None:
    table: dict[str, dict[str, float]] = {}
    for r in report.rows:
        table.setdefault(r.dataset, {})[r.algorithm] = r.mean_ari
    complete = {
        d: row
        for d, row in table.items()
        if set(row) == set(report.algorithms) and all(np.isfinite(v) for v in row.values())
    }
    for d, row in complete.items():
        ranks = mean_relative_rank({d: row})
        for alg, rank in ranks.items():
            report.row(d, alg).per_algorithm_rank = rank
    report.mean_relative_rank = mean_relative_rank(complete)


# -------------------------------------------------------------------- output

REPORT_COLUMNS = [
    "dataset",
    "algorithm",
    "mean_ari",
    "std_ari",
    "per_algorithm_rank",
    "n_runs",
    "n_failures",
    "n_datasets",
    "run_mean_ari",
    "run_std_ari",
]


def _jsonable(obj):
    if isinstance(obj, float) and not math.isfinite(obj):
        return None
    if isinstance(obj, dict):
        return {k: _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.generic):
        return _jsonable(obj.item())
    return obj


def _fmt_cell(r: AggregateResult | None, best: float) -> str:
    if r is None:
        return "-"
    if not np.isfinite(r.mean_ari):
        return "failed"
    text = f"{r.mean_ari:.3f} ± {r.std_ari:.3f}"
    return f"**{text}**" if np.isfinite(best) and round(r.mean_ari, 3) == round(best, 3) else text


def render_markdown(report: Report) -> str:
    algos = report.algorithms
    lines = [
        "| dataset | " + " | ".join(ALGORITHM_LABELS.get(a, a) for a in algos) + " |",
        "|---" * (len(algos) + 1) + "|",
    ]
    for d in report.datasets:
        cells = {}
        for a in algos:
            try:
                cells[a] = report.row(d, a)
            except KeyError:
                cells[a] = None
        scores = [c.mean_ari for c in cells.values() if c is not None and np.isfinite(c.mean_ari)]
        best = max(scores) if scores else float("nan")
        lines.append(f"| {d} | " + " | ".join(_fmt_cell(cells[a], best) for a in algos) + " |")
    if report.mean_relative_rank:
        ranks = [report.mean_relative_rank.get(a) for a in algos]
        lines.append(
            "| Mean Relative Rank | " + " | ".join("-" if r is None else f"{r:.1f}" for r in ranks) + " |"
        )
    return "\n".join(lines) + "\n"


def emit_report(report: Report, path, fmt: str = "markdown") -> Path:
    """Write the report as ``csv`` (aggregate rows), ``json`` (everything) or ``markdown`` (table)."""
    if fmt not in REPORT_FORMATS:
        raise ValueError(f"format must be one of {REPORT_FORMATS}")
    path = Path(path)
    if path.parent and not path.parent.exists():
        path.parent.mkdir(parents=True, exist_ok=True)
    if fmt == "csv":
        with path.open("w", newline="", encoding="utf-8") as fh:
            writer = csv.writer(fh)
            writer.writerow(REPORT_COLUMNS)
            for r in report.rows:
                writer.writerow([getattr(r, c) if isinstance(getattr(r, c), str) else repr(getattr(r, c)) for c in REPORT_COLUMNS])
    elif fmt == "json":
        doc = {
            "algorithms": report.algorithms,
            "rows": [asdict(r) for r in report.rows],
            "mean_relative_rank": report.mean_relative_rank,
            "errors": report.errors,
            "provenance": report.provenance,
            "records": [asdict(r) for r in report.records],
        }
        path.write_text(json.dumps(_jsonable(doc), indent=2) + "\n", encoding="utf-8")
    else:
        path.write_text(render_markdown(report), encoding="utf-8")
    return path


def read_report_csv(path) -> list[AggregateResult]:
    out = []
    with open(path, newline="", encoding="utf-8") as fh:
        for row in csv.DictReader(fh):
            out.append(
                AggregateResult(
                    dataset=row["dataset"],
                    algorithm=row["algorithm"],
                    mean_ari=float(row["mean_ari"]),
                    std_ari=float(row["std_ari"]),
                    per_algorithm_rank=float(row["per_algorithm_rank"]),
                    n_runs=int(row["n_runs"]),
                    n_failures=int(row["n_failures"]),
                    n_datasets=int(row["n_datasets"]),
                    run_mean_ari=float(row["run_mean_ari"]),
                    run_std_ari=float(row["run_std_ari"]),
                )
            )
    return out
