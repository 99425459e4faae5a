"""H-index sequences, coreness and DHC-entropy node representations.

Method one represents every node by its H-index sequence, starting from the
degree and iterating the H operator until the whole table stops changing.
Method two decomposes the augmented adjacency into rank-one idempotents and
embeds each one with the column entropies of its own H-index table.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable

import numpy as np
import scipy.linalg
import scipy.sparse as sp
import scipy.sparse.linalg

from .graph import BipartiteGraph, augment

ENTROPY_DECIMALS = 6
REAL_TOLERANCE = 1e-12


class ConvergenceError(RuntimeError):
    pass


def h_operator(values: Iterable[float]) -> float:
    """Largest ``min(r, x_r)`` over ranks r, values sorted descending.

    On integers this is the classical H-index: the largest h with at least
    h values >= h. Empty input gives 0.
    """
    x = np.asarray(list(values) if not isinstance(values, np.ndarray) else values, dtype=float).ravel()
    if x.size == 0:
        return 0.0
    if not np.all(np.isfinite(x)) or np.any(x < 0):
        raise ValueError("h_operator needs finite nonnegative values")
    x = -np.sort(-x)
    return float(np.max(np.minimum(np.arange(1, x.size + 1), x)))


@dataclass(frozen=True)
class HIndexTable:
    """Rows are nodes, column t holds the order-t H-index (column 0 = degree)."""

    values: np.ndarray

    @property
    def steps(self) -> int:
        return self.values.shape[1]

    @property
    def coreness(self) -> np.ndarray:
        return self.values[:, -1]


def _as_symmetric_csr(adjacency) -> sp.csr_matrix:
    if isinstance(adjacency, BipartiteGraph):
        return augment(adjacency, sparse=True)
    if sp.issparse(adjacency):
        w = sp.csr_matrix(adjacency, dtype=float)
    else:
        w = sp.csr_matrix(np.asarray(adjacency, dtype=float))
    if w.shape[0] != w.shape[1]:
        raise ValueError("adjacency must be square")
    if not np.all(np.isfinite(w.data)):
        raise ValueError("adjacency has non-finite weights")
    w.eliminate_zeros()
    w.sort_indices()
    return w


def _h_step(indptr: np.ndarray, indices: np.ndarray, h: np.ndarray) -> np.ndarray:
    """Apply the H operator to every node's neighbour values at once."""
    n = indptr.size - 1
    counts = np.diff(indptr)
    out = np.zeros(n)
    if indices.size == 0:
        return out
    owner = np.repeat(np.arange(n), counts)
    vals = h[indices]
    order = np.lexsort((-vals, owner))
    ranks = np.arange(indices.size) - indptr[owner] + 1
    cand = np.minimum(ranks, vals[order])
    nonempty = counts > 0
    out[nonempty] = np.maximum.reduceat(cand, indptr[:-1][nonempty])
    return out


def h_index_sequences(adjacency, max_iter: int = 10_000) -> HIndexTable:
    """Iterate the H operator synchronously until the table is unchanged.

    ``adjacency`` is a BipartiteGraph (treated as one network of m+n nodes)
    or a square matrix. Neighbours are the nonzero entries of a row and the
    zero-order value is the row sum of absolute weights, which is the degree
    for a 0/1 matrix. The returned table includes the final repeated column,
    so a graph already at its fixed point has two columns.

    Each step keeps ``min(h, H(h))``. On 0/1 input the H value never exceeds
    the degree, so this is the plain iteration; with real weights the row sum
    can undercut the H value and the unclamped map may cycle.
    """
    w = _as_symmetric_csr(adjacency)
    w.data = np.abs(w.data)
    h = np.asarray(w.sum(axis=1)).ravel()
    columns = [h]
    for _ in range(max_iter):
        columns.append(np.minimum(columns[-1], _h_step(w.indptr, w.indices, columns[-1])))
        # exact on integer tables, since distinct integers differ by >= 1
        if np.max(np.abs(columns[-1] - columns[-2]), initial=0.0) <= REAL_TOLERANCE:
            break
    else:
        raise ConvergenceError(f"H-index iteration did not settle in {max_iter} steps")
    return HIndexTable(np.column_stack(columns))


def coreness_oracle(adjacency) -> np.ndarray:
    """k-core numbers by repeatedly peeling the minimum-degree node."""
    if isinstance(adjacency, BipartiteGraph):
        adjacency = augment(adjacency, sparse=True)
    w = sp.csr_matrix(adjacency)
    w.eliminate_zeros()
    n = w.shape[0]
    neighbours = [set(w.indices[w.indptr[v]:w.indptr[v + 1]].tolist()) - {v} for v in range(n)]
    degree = [len(nb) for nb in neighbours]
    core = [0] * n
    alive = set(range(n))
    k = 0
    while alive:
        v = min(alive, key=lambda x: (degree[x], x))
        k = max(k, degree[v])
        core[v] = k
        alive.remove(v)
        for u in neighbours[v]:
            if u in alive:
                degree[u] -= 1
    return np.array(core, dtype=np.int64)


def method_one_representations(train: BipartiteGraph) -> tuple[np.ndarray, np.ndarray]:
    """H-index sequences of users (first m rows) and items (last n rows)."""
    table = h_index_sequences(train).values
    return table[: train.m], table[train.m:]


class SpectralDecompositionError(RuntimeError):
    pass


@dataclass(frozen=True)
class SpectralDecomposition:
    """Eigenvalues (descending) and orthonormal eigenvectors as columns.

    The idempotent of eigenpair i is ``outer(v_i, v_i)``; it is materialised
    only on request since there are m+n of them, each of order m+n.
    """

    eigenvalues: np.ndarray
    eigenvectors: np.ndarray

    def __len__(self):
        return self.eigenvalues.size

    def idempotent(self, i: int) -> np.ndarray:
        v = self.eigenvectors[:, i]
        return np.outer(v, v)

    @property
    def idempotents(self) -> np.ndarray:
        v = self.eigenvectors
        return np.einsum("ik,jk->kij", v, v)

    def reconstruct(self) -> np.ndarray:
        v = self.eigenvectors
        return (v * self.eigenvalues) @ v.T


def spectral_decompose(b, tolerance: float = 1e-8, k: int | None = None) -> SpectralDecomposition:
    """Eigendecomposition of a symmetric matrix into ``sum(lam_i * B_i)``.

    With ``k`` only the k eigenpairs of largest magnitude are computed (an
    approximation, returned sorted descending); the identities then hold on
    the retained subspace only.
    """
    if sp.issparse(b):
        dense = None
    else:
        dense = np.asarray(b, dtype=float)
    order = b.shape[0]
    if k is not None and not 1 <= k <= order:
        raise ValueError(f"truncation k={k} outside [1, {order}]")
    asym = abs(b - b.T).max() if dense is None else np.max(np.abs(dense - dense.T), initial=0.0)
    if asym > tolerance:
        raise ValueError("matrix is not symmetric")
    try:
        if k is None or k >= order - 1:
            full = dense if dense is not None else b.toarray()
            lam, vec = scipy.linalg.eigh(full)
            if k is not None:
                keep = np.argsort(-np.abs(lam), kind="stable")[:k]
                lam, vec = lam[keep], vec[:, keep]
        else:
            lam, vec = scipy.sparse.linalg.eigsh(sp.csr_matrix(b, dtype=float), k=k, which="LM")
    except (np.linalg.LinAlgError, scipy.sparse.linalg.ArpackError) as exc:
        raise SpectralDecompositionError(str(exc)) from exc
    idx = np.argsort(-lam, kind="stable")
    result = SpectralDecomposition(lam[idx], vec[:, idx])
    if k is None:
        full = dense if dense is not None else b.toarray()
        err = np.max(np.abs(result.reconstruct() - full), initial=0.0)
        if err > tolerance:
            raise SpectralDecompositionError(f"reconstruction error {err:.3g} exceeds {tolerance:g}")
    return result


def column_entropy(table: np.ndarray, decimals: int = ENTROPY_DECIMALS) -> np.ndarray:
    """Shannon entropy (natural log) of the value frequencies in each column."""
    table = np.round(np.asarray(table, dtype=float), decimals) + 0.0
    out = np.empty(table.shape[1])
    for j in range(table.shape[1]):
        _, counts = np.unique(table[:, j], return_counts=True)
        p = counts / counts.sum()
        out[j] = float(-(p * np.log(p)).sum()) + 0.0
    return out


def dhc_entropy(w) -> np.ndarray:
    """Whole-graph embedding: column entropies of the H table of ``|w|``."""
    w = np.asarray(w, dtype=float) if not sp.issparse(w) else w
    if sp.issparse(w):
        if not np.all(np.isfinite(w.data)):
            raise ValueError("matrix has non-finite entries")
    elif not np.all(np.isfinite(w)):
        raise ValueError("matrix has non-finite entries")
    return column_entropy(h_index_sequences(abs(w)).values)


def _rank_one_h_table(a: np.ndarray, scale: float, max_iter: int = 10_000) -> np.ndarray:
    """H table of ``scale * outer(a, a)`` for nonnegative ``a``.

    Every node in the support of ``a`` has the whole support as its
    neighbour set, so each step needs a single H value over the support.
    """
    support = a > 0
    if not support.any() or scale == 0:
        return np.zeros((a.size, 2))
    columns = [scale * a * a[support].sum()]
    for _ in range(max_iter):
        prev = columns[-1]
        nxt = np.where(support, np.minimum(prev, h_operator(prev[support])), 0.0)
        columns.append(nxt)
        if np.max(np.abs(nxt - prev)) <= REAL_TOLERANCE:
            break
    else:
        raise ConvergenceError("rank-one H iteration did not settle")
    return np.column_stack(columns)


def method_two_representations(
    train: BipartiteGraph,
    mode: str = "weighted",
    truncation: int | None = None,
    support_tolerance: float = 1e-12,
) -> tuple[np.ndarray, np.ndarray]:
    """DHC-E embeddings of the idempotents of the augmented adjacency.

    Node i (users first, then items) is embedded from eigenpair i in
    descending eigenvalue order, using ``lam_i * B_i`` (``mode="weighted"``)
    or ``B_i`` (``mode="raw"``). Entries of an eigenvector below
    ``support_tolerance`` in magnitude are treated as exact zeros. With
    ``truncation=k`` only the k largest-magnitude eigenpairs are computed and
    the remaining nodes get the embedding of the zero matrix.
    """
    if mode not in ("weighted", "raw"):
        raise ValueError(f"unknown mode {mode!r}")
    order = train.m + train.n
    if truncation is not None and truncation > order:
        raise ValueError(f"truncation {truncation} exceeds matrix order {order}")
    decomp = spectral_decompose(augment(train, sparse=truncation is not None), k=truncation)
    embeddings = []
    for i in range(order):
        if i < len(decomp):
            a = np.abs(decomp.eigenvectors[:, i])
            a[a <= support_tolerance] = 0.0
            scale = abs(decomp.eigenvalues[i]) if mode == "weighted" else 1.0
            table = _rank_one_h_table(a, scale)
        else:
            table = np.zeros((order, 2))
        embeddings.append(column_entropy(table))
    width = max(e.size for e in embeddings)
    f = np.array([np.pad(e, (0, width - e.size), mode="edge") for e in embeddings])
    return f[: train.m], f[train.m:]


def representations(train: BipartiteGraph, method: str = "method-one", **kwargs) -> tuple[np.ndarray, np.ndarray]:
    if method in ("method-one", "one", "h-index"):
        return method_one_representations(train)
    if method in ("method-two", "two", "dhc-e"):
        return method_two_representations(train, **kwargs)
    raise ValueError(f"unknown representation method {method!r}")


def export_representations(path, keys, f: np.ndarray, delimiter: str = "\t") -> None:
    """One line per node: key followed by its s coordinates."""
    with open(path, "w", encoding="utf-8") as fh:
        for key, row in zip(keys, f):
            fh.write(delimiter.join([str(key)] + [repr(float(x)) for x in row]) + "\n")


def max_entropy(num_nodes: int) -> float:
    return math.log(num_nodes) if num_nodes > 0 else 0.0
