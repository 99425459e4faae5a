"""Bipartite interaction graphs, seeded edge splits and the augmented adjacency."""

from __future__ import annotations

import io
import os
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, NamedTuple, Sequence

import numpy as np
import scipy.sparse as sp


class InteractionFormatError(ValueError):
    """Raised for a malformed line in an interaction file."""

    def __init__(self, lineno: int, message: str):
        super().__init__(f"line {lineno}: {message}")
        self.lineno = lineno


class InteractionRecord(NamedTuple):
    user_key: str
    item_key: str
    flag: int = 1


def parse_interactions(
    source: str | Iterable[str],
    delimiter: str | None = None,
    flag_column: int | None = 2,
    skip_header: bool = False,
) -> list[InteractionRecord]:
    """Parse ``user item [flag]`` lines into records.

    ``delimiter=None`` splits on any run of whitespace. Blank lines and lines
    starting with ``#`` are skipped. ``flag_column`` names the field holding
    the 0/1 indicator; a missing field means 1, and ``flag_column=None``
    ignores extra columns entirely (e.g. ratings and timestamps).
    """
    if isinstance(source, str):
        source = io.StringIO(source)
    records = []
    header_pending = skip_header
    for lineno, raw in enumerate(source, start=1):
        line = raw.rstrip("\r\n")
        if not line.strip() or line.lstrip().startswith("#"):
            continue
        if header_pending:
            header_pending = False
            continue
        fields = line.split(delimiter)
        if delimiter is not None:
            fields = [f.strip() for f in fields]
        if len(fields) < 2:
            raise InteractionFormatError(lineno, "too few fields (need user and item)")
        flag = 1
        if flag_column is not None and len(fields) > flag_column:
            token = fields[flag_column]
            try:
                value = float(token)
            except ValueError:
                raise InteractionFormatError(lineno, f"flag {token!r} is not numeric") from None
            if value not in (0.0, 1.0):
                raise InteractionFormatError(lineno, f"flag {token!r} is not 0 or 1")
            flag = int(value)
        records.append(InteractionRecord(fields[0], fields[1], flag))
    return records


def load_interactions(path: str | os.PathLike, delimiter: str | None = None) -> list[InteractionRecord]:
    """Read an interaction file from disk.

    Atomic files in the ``.inter`` layout (tab separated, typed header such as
    ``user_id:token``) are recognised: the header is skipped and every row is
    an observed interaction regardless of its rating column.
    """
    path = Path(path)
    with path.open(encoding="utf-8") as fh:
        first = fh.readline()
    typed_header = ":token" in first or ":float" in first
    with path.open(encoding="utf-8") as fh:
        if typed_header:
            return parse_interactions(fh, delimiter="\t", flag_column=None, skip_header=True)
        return parse_interactions(fh, delimiter=delimiter)


@dataclass(frozen=True, eq=False)
class BipartiteGraph:
    """Binary user-item graph with dense integer indices.

    ``rows`` and ``cols`` hold the edge list sorted by (user, item) with no
    duplicates. Key tables map indices back to external identifiers.
    """

    m: int
    n: int
    rows: np.ndarray
    cols: np.ndarray
    user_keys: tuple[str, ...] = field(default=(), repr=False)
    item_keys: tuple[str, ...] = field(default=(), repr=False)

    def __post_init__(self):
        rows = np.asarray(self.rows, dtype=np.int64)
        cols = np.asarray(self.cols, dtype=np.int64)
        if rows.shape != cols.shape or rows.ndim != 1:
            raise ValueError("rows and cols must be 1-d arrays of equal length")
        if rows.size:
            if rows.min() < 0 or rows.max() >= self.m or cols.min() < 0 or cols.max() >= self.n:
                raise ValueError("edge index out of range")
        flat = np.unique(rows * max(self.n, 1) + cols)
        rows, cols = np.divmod(flat, max(self.n, 1))
        rows.flags.writeable = False
        cols.flags.writeable = False
        object.__setattr__(self, "rows", rows)
        object.__setattr__(self, "cols", cols)

    @classmethod
    def from_edges(cls, m: int, n: int, edges: Iterable[tuple[int, int]] | np.ndarray, **keys) -> "BipartiteGraph":
        arr = np.asarray(list(edges) if not isinstance(edges, np.ndarray) else edges, dtype=np.int64)
        arr = arr.reshape(-1, 2)
        return cls(m, n, arr[:, 0], arr[:, 1], **keys)

    @classmethod
    def from_dense(cls, a) -> "BipartiteGraph":
        a = np.asarray(a)
        rows, cols = np.nonzero(a)
        return cls(a.shape[0], a.shape[1], rows, cols)

    @property
    def num_edges(self) -> int:
        return int(self.rows.size)

    @property
    def edges(self) -> set[tuple[int, int]]:
        return set(zip(self.rows.tolist(), self.cols.tolist()))

    @property
    def edge_array(self) -> np.ndarray:
        return np.column_stack([self.rows, self.cols])

    @property
    def k_u(self) -> np.ndarray:
        return np.bincount(self.rows, minlength=self.m)

    @property
    def k_i(self) -> np.ndarray:
        return np.bincount(self.cols, minlength=self.n)

    def adjacency(self) -> sp.csr_matrix:
        data = np.ones(self.num_edges)
        return sp.csr_matrix((data, (self.rows, self.cols)), shape=(self.m, self.n))

    def dense(self) -> np.ndarray:
        a = np.zeros((self.m, self.n))
        a[self.rows, self.cols] = 1.0
        return a

    def with_edges(self, rows: np.ndarray, cols: np.ndarray) -> "BipartiteGraph":
        """Same index space and key tables, different edge set."""
        return BipartiteGraph(self.m, self.n, rows, cols, self.user_keys, self.item_keys)


def build_graph(records: Sequence[InteractionRecord]) -> BipartiteGraph:
    """Index keys in first-appearance order and collapse duplicate pairs."""
    if not records:
        raise ValueError("cannot build a graph from an empty record list")
    users: dict[str, int] = {}
    items: dict[str, int] = {}
    rows, cols = [], []
    for rec in records:
        if rec.flag != 1:
            continue
        rows.append(users.setdefault(rec.user_key, len(users)))
        cols.append(items.setdefault(rec.item_key, len(items)))
    if not rows:
        raise ValueError("no record carries flag 1")
    return BipartiteGraph(len(users), len(items), np.array(rows), np.array(cols), tuple(users), tuple(items))


@dataclass(frozen=True, eq=False)
class SplitRealization:
    seed: int
    train: BipartiteGraph
    eval_edges: np.ndarray
    test_edges: np.ndarray

    @property
    def full(self) -> BipartiteGraph:
        allrows = np.concatenate([self.train.rows, self.eval_edges[:, 0], self.test_edges[:, 0]])
        allcols = np.concatenate([self.train.cols, self.eval_edges[:, 1], self.test_edges[:, 1]])
        return self.train.with_edges(allrows, allcols)


def _split_cuts(total: int, ratios: Sequence[float]) -> tuple[int, int]:
    if len(ratios) != 3:
        raise ValueError("ratios must have three entries (train, eval, test)")
    if any(r < 0 for r in ratios) or abs(sum(ratios) - 1.0) > 1e-9:
        raise ValueError(f"ratios must be nonnegative and sum to 1, got {tuple(ratios)}")
    first = int(round(ratios[0] * total))
    second = int(round((ratios[0] + ratios[1]) * total))
    return first, max(first, second)


def split(
    graph: BipartiteGraph,
    seed: int,
    ratios: Sequence[float] = (0.8, 0.1, 0.1),
    by_user: bool = False,
) -> SplitRealization:
    """Shuffle the edges with a generator keyed on ``seed`` and cut by ratio.

    ``by_user=True`` applies the same cut inside every user's edge list
    instead of over the whole edge set.
    """
    first, second = _split_cuts(graph.num_edges, ratios)
    if graph.num_edges < 10:
        raise ValueError("split needs at least 10 edges")
    rng = np.random.default_rng(seed)
    edges = graph.edge_array
    if not by_user:
        perm = rng.permutation(graph.num_edges)
        train_idx, eval_idx, test_idx = perm[:first], perm[first:second], perm[second:]
    else:
        parts = ([], [], [])
        starts = np.searchsorted(graph.rows, np.arange(graph.m + 1))
        for u in range(graph.m):
            lo, hi = starts[u], starts[u + 1]
            if hi == lo:
                continue
            perm = lo + rng.permutation(hi - lo)
            a, b = _split_cuts(hi - lo, ratios)
            parts[0].append(perm[:a])
            parts[1].append(perm[a:b])
            parts[2].append(perm[b:])
        train_idx, eval_idx, test_idx = (np.concatenate(p) if p else np.empty(0, np.int64) for p in parts)
    train = graph.with_edges(edges[train_idx, 0], edges[train_idx, 1])
    return SplitRealization(
        seed=seed,
        train=train,
        eval_edges=edges[np.sort(eval_idx)],
        test_edges=edges[np.sort(test_idx)],
    )


def realizations(
    graph: BipartiteGraph,
    base_seed: int,
    count: int,
    ratios: Sequence[float] = (0.8, 0.1, 0.1),
    by_user: bool = False,
) -> list[SplitRealization]:
    if count < 1:
        raise ValueError("count must be at least 1")
    return [split(graph, base_seed + k, ratios, by_user=by_user) for k in range(count)]


def augment(graph: BipartiteGraph, sparse: bool = False):
    """Order m+n symmetric matrix with A and A^T in the off-diagonal blocks."""
    a = graph.adjacency()
    b = sp.bmat([[None, a], [a.T, None]], format="csr")
    b.resize((graph.m + graph.n, graph.m + graph.n))
    return b if sparse else b.toarray()


def export_split(realization: SplitRealization, directory: str | os.PathLike) -> dict[str, Path]:
    """Write train/eval/test as ``user item`` lines using external keys."""
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    g = realization.train
    ukeys = g.user_keys or tuple(str(i) for i in range(g.m))
    ikeys = g.item_keys or tuple(str(j) for j in range(g.n))
    out = {}
    for name, edges in (
        ("train", g.edge_array),
        ("eval", realization.eval_edges),
        ("test", realization.test_edges),
    ):
        path = directory / f"{name}.txt"
        with path.open("w", encoding="utf-8") as fh:
            for u, i in edges:
                fh.write(f"{ukeys[u]} {ikeys[i]}\n")
        out[name] = path
    return out
