"""Top-N recommendation lists and Recall/MRR/NDCG at N."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp

from .graph import BipartiteGraph

METRIC_NAMES = ("recall", "mrr", "ndcg")


def _mask_matrix(mask, shape) -> sp.csr_matrix | None:
    if mask is None:
        return None
    if isinstance(mask, BipartiteGraph):
        return mask.adjacency()
    if sp.issparse(mask):
        return sp.csr_matrix(mask)
    mask = np.asarray(mask)
    if mask.ndim == 2 and mask.shape[1] == 2 and mask.shape != tuple(shape):
        data = np.ones(mask.shape[0])
        return sp.csr_matrix((data, (mask[:, 0], mask[:, 1])), shape=shape)
    return sp.csr_matrix(mask.astype(bool))


def top_n(r, train_mask=None, n: int = 10, chunk: int = 1024) -> list[np.ndarray]:
    """Per user, the ``n`` highest-scoring items outside ``train_mask``.

    Ties go to the lower item index. Users with fewer than ``n`` candidate
    items get shorter lists.
    """
    if n < 1:
        raise ValueError("N must be >= 1")
    r = np.asarray(r, dtype=float)
    mask = _mask_matrix(train_mask, r.shape)
    lists = []
    for lo in range(0, r.shape[0], chunk):
        block = -r[lo:lo + chunk].copy()
        if mask is not None:
            sub = mask[lo:lo + chunk].tocoo()
            block[sub.row, sub.col] = np.inf
        order = np.argsort(block, axis=1, kind="stable")[:, :n]
        picked = np.take_along_axis(block, order, axis=1)
        for row, vals in zip(order, picked):
            lists.append(row[np.isfinite(vals)])
    return lists


def ground_truth(edges: np.ndarray, m: int) -> list[set[int]]:
    """Item sets per user from an (k, 2) edge array."""
    truth: list[set[int]] = [set() for _ in range(m)]
    for u, i in np.asarray(edges, dtype=np.int64).reshape(-1, 2):
        truth[u].add(int(i))
    return truth


def _scored_users(truth):
    users = [u for u, items in enumerate(truth) if items]
    if not users:
        raise ValueError("no user has ground-truth items")
    return users


def recall_at_n(lists, truth, n: int = 10) -> float:
    users = _scored_users(truth)
    total = 0.0
    for u in users:
        hits = sum(1 for i in lists[u][:n] if int(i) in truth[u])
        total += hits / len(truth[u])
    return total / len(users)


def mrr_at_n(lists, truth, n: int = 10) -> float:
    """Mean reciprocal rank of the first hit; a user without a hit scores 0."""
    users = _scored_users(truth)
    total = 0.0
    for u in users:
        for rank, i in enumerate(lists[u][:n], start=1):
            if int(i) in truth[u]:
                total += 1.0 / rank
                break
    return total / len(users)


def ndcg_at_n(lists, truth, n: int = 10) -> float:
    users = _scored_users(truth)
    discount = 1.0 / np.log2(np.arange(2, n + 2))
    ideal = np.cumsum(discount)
    total = 0.0
    for u in users:
        dcg = sum(discount[k] for k, i in enumerate(lists[u][:n]) if int(i) in truth[u])
        total += dcg / ideal[min(len(truth[u]), n) - 1]
    return total / len(users)


def evaluate(lists, truth, n: int = 10) -> dict[str, float]:
    return {
        "recall": recall_at_n(lists, truth, n),
        "mrr": mrr_at_n(lists, truth, n),
        "ndcg": ndcg_at_n(lists, truth, n),
    }


@dataclass
class MetricReport:
    """Per-realization metric values with their mean and sample std."""

    label: str
    n: int
    seeds: list[int] = field(default_factory=list)
    values: dict[str, list[float]] = field(default_factory=lambda: {k: [] for k in METRIC_NAMES})
    approximate: bool = False

    @property
    def count(self) -> int:
        return len(self.seeds)

    def add(self, seed: int, metrics: dict[str, float]) -> None:
        self.seeds.append(seed)
        for k in METRIC_NAMES:
            self.values[k].append(float(metrics[k]))

    def mean(self, metric: str) -> float:
        return float(np.mean(self.values[metric]))

    def std(self, metric: str) -> float:
        v = self.values[metric]
        return float(np.std(v, ddof=1)) if len(v) > 1 else 0.0

    def summary(self) -> dict[str, tuple[float, float]]:
        return {k: (self.mean(k), self.std(k)) for k in METRIC_NAMES}


def aggregate(per_realization: list[dict[str, float]], label: str = "", n: int = 10, seeds=None) -> MetricReport:
    if not per_realization:
        raise ValueError("aggregate needs at least one realization")
    seeds = list(range(len(per_realization))) if seeds is None else list(seeds)
    report = MetricReport(label=label, n=n)
    for seed, metrics in zip(seeds, per_realization):
        report.add(seed, metrics)
    return report
