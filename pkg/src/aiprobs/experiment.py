"""End-to-end runs: realizations -> representations -> predictions -> metrics -> reports."""

from __future__ import annotations

import dataclasses
import hashlib
import json
import logging
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from functools import lru_cache
from pathlib import Path
from typing import Sequence

import numpy as np

from . import __version__
from .dhc import representations
from .diffusion import METRICS, aiprobs_predict, probs_predict, pure_dhc_predict
from .evaluation import METRIC_NAMES, MetricReport, evaluate, ground_truth, top_n
from .graph import BipartiteGraph, build_graph, load_interactions, split

log = logging.getLogger(__name__)

MODELS = ("probs", "aiprobs", "pure-dhc")


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class RunConfig:
    dataset: str
    base_seed: int = 0
    realizations: int = 30
    ratios: tuple[float, float, float] = (0.8, 0.1, 0.1)
    n: int = 10
    model: str = "aiprobs"
    representation: str = "method-one"
    method_two_mode: str = "weighted"
    truncation: int | None = None
    metric: str = "cosine"
    normalization: str = "maxmin"
    proportioning: str = "share"
    scope: str = "full"
    exclude_eval: bool = True
    by_user_split: bool = False
    output_dir: str | None = None
    workers: int = 1
    name: str | None = None

    @classmethod
    def from_env(cls, **kwargs) -> "RunConfig":
        """Apply ``AIPROBS_SEED`` / ``AIPROBS_OUTPUT_DIR`` over ``kwargs``."""
        if "AIPROBS_SEED" in os.environ:
            kwargs["base_seed"] = int(os.environ["AIPROBS_SEED"])
        if "AIPROBS_OUTPUT_DIR" in os.environ:
            kwargs["output_dir"] = os.environ["AIPROBS_OUTPUT_DIR"]
        return cls(**kwargs)

    @property
    def approximate(self) -> bool:
        return self.model != "probs" and self.representation == "method-two" and self.truncation is not None

    @property
    def label(self) -> str:
        if self.name:
            return self.name
        if self.model == "probs":
            return "ProbS"
        suffix = f" [approx k={self.truncation}]" if self.approximate else ""
        if self.model == "pure-dhc":
            return f"Pure-DHC{suffix}"
        parts = [self.metric]
        if self.normalization == "maxmin":
            parts.append("M-M")
        if self.proportioning == "share":
            parts.append("P")
        elif self.proportioning == "literal":
            parts.append("P(literal)")
        return " + ".join(parts) + suffix

    def validate(self) -> None:
        if self.model not in MODELS:
            raise ConfigError(f"model must be one of {MODELS}, got {self.model!r}")
        if self.realizations < 1:
            raise ConfigError("realizations must be >= 1")
        if self.n < 1:
            raise ConfigError("N must be >= 1")
        if self.representation not in ("method-one", "method-two"):
            raise ConfigError(f"unknown representation {self.representation!r}")
        if self.metric not in METRICS:
            raise ConfigError(f"metric must be one of {METRICS}")
        if self.normalization not in ("maxmin", "none"):
            raise ConfigError("normalization must be 'maxmin' or 'none'")
        if self.proportioning not in ("share", "literal", "none"):
            raise ConfigError("proportioning must be 'share', 'literal' or 'none'")
        if self.scope not in ("full", "observed"):
            raise ConfigError("scope must be 'full' or 'observed'")
        if self.model == "aiprobs" and self.proportioning == "literal":
            if self.normalization == "maxmin":
                raise ConfigError("literal proportioning divides by the 0 that max-min assigns to each line minimum")
            if self.scope == "full":
                raise ConfigError("literal proportioning divides by the structural zeros of each line; use scope='observed'")
        if abs(sum(self.ratios) - 1.0) > 1e-9:
            raise ConfigError(f"ratios must sum to 1, got {self.ratios}")

    def protocol(self) -> tuple:
        """Fields that must agree for configs to share realizations."""
        return (self.dataset, self.base_seed, self.realizations, tuple(self.ratios), self.n,
                self.exclude_eval, self.by_user_split)


@lru_cache(maxsize=4)
def _load_graph(path: str) -> BipartiteGraph:
    return build_graph(load_interactions(path))


def _dataset_digest(path: str) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            h.update(chunk)
    return h.hexdigest()


def _predict(config: RunConfig, train: BipartiteGraph, reps: dict) -> np.ndarray:
    if config.model == "probs":
        return probs_predict(train)
    key = (config.representation, config.method_two_mode, config.truncation)
    if key not in reps:
        kwargs = {}
        if config.representation == "method-two":
            kwargs = {"mode": config.method_two_mode, "truncation": config.truncation}
        reps[key] = representations(train, config.representation, **kwargs)
    f_u, f_i = reps[key]
    if config.model == "pure-dhc":
        return pure_dhc_predict(f_u, f_i)
    return aiprobs_predict(train, f_u, f_i, config.metric, config.normalization, config.proportioning, config.scope)


def evaluate_realization(graph: BipartiteGraph, seed: int, configs: Sequence[RunConfig]) -> list[dict[str, float]]:
    """Metrics of every config on one seeded split (configs share the protocol)."""
    first = configs[0]
    real = split(graph, seed, first.ratios, by_user=first.by_user_split)
    train = real.train
    known = train
    if first.exclude_eval:
        known = train.with_edges(np.r_[train.rows, real.eval_edges[:, 0]], np.r_[train.cols, real.eval_edges[:, 1]])
    truth = ground_truth(real.test_edges, graph.m)
    reps: dict = {}
    out = []
    for config in configs:
        scores = _predict(config, train, reps)
        out.append(evaluate(top_n(scores, known, config.n), truth, config.n))
    return out


def _worker(args):
    path, seed, configs = args
    return evaluate_realization(_load_graph(path), seed, configs)


def _run(configs: Sequence[RunConfig]) -> list[MetricReport]:
    for c in configs:
        c.validate()
    protocols = {c.protocol() for c in configs}
    if len(protocols) != 1:
        raise ConfigError("all configs in one run must share dataset, seeds, ratios, N and masking")
    first = configs[0]
    path = str(first.dataset)
    if not Path(path).is_file():
        raise FileNotFoundError(f"dataset not readable: {path}")
    graph = _load_graph(path)
    seeds = [first.base_seed + k for k in range(first.realizations)]
    reports = [MetricReport(label=c.label, n=c.n, approximate=c.approximate) for c in configs]
    jobs = [(path, seed, tuple(configs)) for seed in seeds]
    workers = max(1, first.workers)
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(_worker, jobs))
    else:
        results = [evaluate_realization(graph, seed, configs) for seed in seeds]
    for seed, per_config in zip(seeds, results):
        for report, metrics in zip(reports, per_config):
            report.add(seed, metrics)
        log.info("seed %d done: %s", seed, ", ".join(f"{r.label}={r.values['recall'][-1]:.4f}" for r in reports))
    return reports


def run_experiment(config: RunConfig) -> MetricReport:
    """Run one model config over all realizations and write its reports."""
    report = _run([config])[0]
    if config.output_dir:
        write_reports([report], [config], config.output_dir)
    return report


@dataclass
class ComparisonTable:
    reports: list[MetricReport]
    metrics: tuple[str, ...] = METRIC_NAMES
    best: dict[str, int] = field(init=False)

    def __post_init__(self):
        if not self.reports:
            raise ValueError("empty comparison")
        self.best = {m: int(np.argmax([r.mean(m) for r in self.reports])) for m in self.metrics}

    def row(self, label: str) -> MetricReport:
        for r in self.reports:
            if r.label == label:
                return r
        raise KeyError(label)

    def render(self) -> str:
        n = self.reports[0].n
        head = ["model"] + [f"{m.upper() if m != 'recall' else 'Recall'}@{n}" for m in self.metrics]
        lines = []
        for idx, r in enumerate(self.reports):
            cells = [r.label]
            for m in self.metrics:
                mark = "*" if self.best[m] == idx else " "
                cells.append(f"{r.mean(m):.4f} ± {r.std(m):.4f}{mark}")
            lines.append(cells)
        widths = [max(len(x[i]) for x in [head] + lines) for i in range(len(head))]
        fmt = lambda cells: "  ".join(c.ljust(w) for c, w in zip(cells, widths)).rstrip()
        body = [fmt(head), fmt(["-" * w for w in widths])] + [fmt(c) for c in lines]
        body.append(f"(* best per column; mean ± sample std over {self.reports[0].count} realizations)")
        return "\n".join(body) + "\n"


def run_matrix(configs: Sequence[RunConfig], output_dir: str | None = None) -> ComparisonTable:
    """Run several configs on shared realizations and tabulate them."""
    if not configs:
        raise ConfigError("run_matrix needs at least one config")
    reports = _run(list(configs))
    table = ComparisonTable(reports)
    out = output_dir or configs[0].output_dir
    if out:
        write_reports(reports, list(configs), out, table)
    return table


def combination_grid(base: RunConfig, metrics: Sequence[str] = METRICS) -> list[RunConfig]:
    """The metric x {M-M + P, M-M, bare} AIProbS variants."""
    grid = []
    for metric in metrics:
        for normalization, prop in (("maxmin", "share"), ("maxmin", "none"), ("none", "none")):
            grid.append(dataclasses.replace(base, model="aiprobs", metric=metric, normalization=normalization,
                                            proportioning=prop, name=None))
    return grid


def write_reports(reports: Sequence[MetricReport], configs: Sequence[RunConfig], output_dir,
                  table: ComparisonTable | None = None) -> dict[str, Path]:
    """Write long-format per-realization values, aggregates, a rendered table and a manifest."""
    out = Path(output_dir)
    out.mkdir(parents=True, exist_ok=True)
    paths = {name: out / name for name in ("per_realization.tsv", "aggregate.tsv", "report.txt", "manifest.json")}
    with paths["per_realization.tsv"].open("w", encoding="utf-8") as fh:
        fh.write("model\tseed\tmetric\tN\tvalue\n")
        for r in reports:
            for k, seed in enumerate(r.seeds):
                for m in METRIC_NAMES:
                    fh.write(f"{r.label}\t{seed}\t{m}\t{r.n}\t{r.values[m][k]!r}\n")
    with paths["aggregate.tsv"].open("w", encoding="utf-8") as fh:
        fh.write("model\tmetric\tN\tmean\tstd\tcount\tapproximate\n")
        for r in reports:
            for m in METRIC_NAMES:
                fh.write(f"{r.label}\t{m}\t{r.n}\t{r.mean(m)!r}\t{r.std(m)!r}\t{r.count}\t{str(r.approximate).lower()}\n")
    table = table or ComparisonTable(list(reports))
    paths["report.txt"].write_text(table.render(), encoding="utf-8")
    first = configs[0]
    manifest = {
        "package_version": __version__,
        "dataset": str(first.dataset),
        "dataset_sha256": _dataset_digest(str(first.dataset)),
        "seeds": reports[0].seeds,
        "configs": [{k: v for k, v in dataclasses.asdict(c).items() if k not in ("output_dir", "workers")} for c in configs],
    }
    paths["manifest.json"].write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n", encoding="utf-8")
    return paths
