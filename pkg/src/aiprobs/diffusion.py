"""ProbS mass diffusion and its representation-weighted variant AIProbS.

All predictors run exactly one diffusion round: resource starts on a user's
items, flows to the items' users and back to items. ProbS splits resource
equally by degree at both hops; AIProbS splits it in proportion to the
max-min normalised similarity between user and item representations.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

from .graph import BipartiteGraph

METRICS = ("cosine", "cov", "dot", "euclidean", "pearson")
NORMALIZATIONS = ("maxmin", "none")
PROPORTIONINGS = ("share", "literal", "none")
SCOPES = ("full", "observed")


def _adjacency(a) -> sp.csr_matrix:
    if isinstance(a, BipartiteGraph):
        return a.adjacency()
    if sp.issparse(a):
        return sp.csr_matrix(a, dtype=float)
    return sp.csr_matrix(np.asarray(a, dtype=float))


def _safe_inverse(k: np.ndarray) -> np.ndarray:
    k = np.asarray(k, dtype=float)
    out = np.zeros_like(k)
    np.divide(1.0, k, out=out, where=k != 0)
    return out


def diffusion_operator(a, dense: bool = True):
    """``T = (D_I o A)^T (D_U o A)``, an n x n item-to-item transfer matrix.

    Terms through a zero-degree node contribute nothing, so rows of items
    with no users are zero and every other row sums to one.
    """
    a = _adjacency(a)
    ku = np.asarray(a.sum(axis=1)).ravel()
    ki = np.asarray(a.sum(axis=0)).ravel()
    by_item = sp.csr_matrix(a.multiply(_safe_inverse(ki)[None, :]))
    by_user = sp.csr_matrix(a.multiply(_safe_inverse(ku)[:, None]))
    t = (by_item.T @ by_user).tocsr()
    return t.toarray() if dense else t


def probs_predict(a) -> np.ndarray:
    """One ProbS round, ``R = A T``; row i of R sums to user i's degree."""
    a = _adjacency(a)
    return np.asarray(a @ diffusion_operator(a))


def iterate_to_fixpoint(a, t=None, max_steps: int = 10_000, epsilon: float = 1e-10) -> list[float]:
    """Distances ``max|A_{k+1} - A_k|`` of the iteration ``A <- A T``.

    Stops as soon as a distance drops below ``epsilon`` or after
    ``max_steps`` products.
    """
    if max_steps < 1:
        raise ValueError("max_steps must be >= 1")
    x = _adjacency(a).toarray()
    t = diffusion_operator(x) if t is None else np.asarray(t, dtype=float)
    distances = []
    for _ in range(max_steps):
        nxt = x @ t
        d = float(np.max(np.abs(nxt - x), initial=0.0))
        distances.append(d)
        x = nxt
        if d < epsilon:
            break
    return distances


def _row_norms(f: np.ndarray) -> np.ndarray:
    return np.sqrt(np.einsum("ij,ij->i", f, f))


def _check_widths(f_u, f_i):
    f_u = np.asarray(f_u, dtype=float)
    f_i = np.asarray(f_i, dtype=float)
    if f_u.ndim != 2 or f_i.ndim != 2 or f_u.shape[1] != f_i.shape[1]:
        raise ValueError(f"representation widths differ: {f_u.shape} vs {f_i.shape}")
    return f_u, f_i


def similarity(f_u, f_i, metric: str = "cosine") -> np.ndarray:
    """m x n user-item similarity from row representations.

    ``euclidean`` is a dissimilarity and is returned as is. Its norm terms
    enter unsquared, ``sqrt(|-2 u.v + |u| + |v||)``, which coincides with the
    geometric distance only for norms in {0, 1}. Rows with zero norm get
    similarity 0 under cosine and pearson.
    """
    f_u, f_i = _check_widths(f_u, f_i)
    s = f_u.shape[1]
    if metric == "dot":
        return f_u @ f_i.T
    if metric == "euclidean":
        return np.sqrt(np.abs(-2.0 * (f_u @ f_i.T) + _row_norms(f_u)[:, None] + _row_norms(f_i)[None, :]))
    if metric in ("cov", "pearson"):
        f_u = f_u - f_u.mean(axis=1, keepdims=True)
        f_i = f_i - f_i.mean(axis=1, keepdims=True)
        if metric == "cov":
            return (f_u @ f_i.T) / s
    elif metric != "cosine":
        raise ValueError(f"unknown metric {metric!r}; expected one of {METRICS}")
    inv_u = _safe_inverse(_row_norms(f_u))
    inv_i = _safe_inverse(_row_norms(f_i))
    return (f_u @ f_i.T) * inv_u[:, None] * inv_i[None, :]


def edge_similarity(f_u, f_i, rows, cols, metric: str = "cosine") -> np.ndarray:
    """``similarity(f_u, f_i, metric)[rows, cols]`` without the full matrix."""
    f_u, f_i = _check_widths(f_u, f_i)
    rows = np.asarray(rows, dtype=np.int64)
    cols = np.asarray(cols, dtype=np.int64)
    s = f_u.shape[1]
    if metric in ("cov", "pearson"):
        f_u = f_u - f_u.mean(axis=1, keepdims=True)
        f_i = f_i - f_i.mean(axis=1, keepdims=True)
    elif metric not in METRICS:
        raise ValueError(f"unknown metric {metric!r}; expected one of {METRICS}")
    dots = np.einsum("ij,ij->i", f_u[rows], f_i[cols])
    if metric == "dot":
        return dots
    if metric == "cov":
        return dots / s
    nu, ni = _row_norms(f_u), _row_norms(f_i)
    if metric == "euclidean":
        return np.sqrt(np.abs(-2.0 * dots + nu[rows] + ni[cols]))
    return dots * _safe_inverse(nu)[rows] * _safe_inverse(ni)[cols]


def _group_stats(values: np.ndarray, groups: np.ndarray, n: int):
    """Per-group min, max, sum and count of ``values``."""
    order = np.argsort(groups, kind="stable")
    v = values[order]
    counts = np.bincount(groups, minlength=n)
    lo = np.full(n, np.inf)
    hi = np.full(n, -np.inf)
    total = np.zeros(n)
    present = counts > 0
    if v.size:
        starts = np.concatenate([[0], np.cumsum(counts)[:-1]])[present]
        lo[present] = np.minimum.reduceat(v, starts)
        hi[present] = np.maximum.reduceat(v, starts)
        total[present] = np.add.reduceat(v, starts)
    return lo, hi, total, counts


def _line_maxmin(values, fill, groups, n, length, scope):
    """Max-min rescale per line; returns (edge values, per-line fill).

    With ``scope="full"`` the unobserved entries of a line (all equal to
    ``fill``) take part in the min and max and are rescaled too. With
    ``scope="observed"`` only the edges count and the fill is forced to 0.
    """
    lo, hi, _, counts = _group_stats(values, groups, n)
    if scope == "full":
        gaps = counts < np.broadcast_to(length, (n,))
        lo = np.where(gaps, np.minimum(lo, fill), lo)
        hi = np.where(gaps, np.maximum(hi, fill), hi)
    span = hi - lo
    moving = span > 0
    inv = np.zeros(n)
    inv[moving] = 1.0 / span[moving]
    out = np.where(moving[groups], (values - lo[groups]) * inv[groups], 1.0)
    if scope == "full":
        new_fill = np.where(moving, (fill - lo) * inv, 1.0)
    else:
        new_fill = np.zeros(n)
    return out, new_fill


def _line_proportion(values, fill, groups, n, length, form):
    """Share or literal proportioning over whole lines (edges plus fill)."""
    _, _, total, counts = _group_stats(values, groups, n)
    length = np.broadcast_to(np.asarray(length, dtype=float), (n,))
    gaps = length - counts
    total = total + gaps * fill
    if form == "share":
        if np.any(values < 0) or np.any(fill[gaps > 0] < 0):
            raise ValueError("share proportioning needs nonnegative values")
        flat = total == 0
        denom = np.where(flat, 1.0, total)
        uniform = _safe_inverse(length)
        out = np.where(flat[groups], uniform[groups], values / denom[groups])
        new_fill = np.where(flat, uniform, fill / denom)
        new_fill = np.where(gaps > 0, new_fill, 0.0)
        return out, new_fill
    if form == "literal":
        if np.any(values == 0) or np.any(fill[gaps > 0] == 0):
            raise ValueError("literal proportioning divides by an entry equal to 0")
        out = total[groups] / values
        new_fill = np.zeros(n)
        np.divide(total, fill, out=new_fill, where=gaps > 0)
        return out, new_fill
    raise ValueError(f"unknown proportioning form {form!r}")


def maxmin_normalize(m, axis: int = 1, mask=None) -> np.ndarray:
    """Min-max rescale each row (``axis=1``) or column (``axis=0``).

    Without a mask every entry of the line takes part. With a mask only the
    masked entries are rescaled and the rest become 0. A line whose
    participating entries are all equal maps them to 1.
    """
    m = np.asarray(m, dtype=float)
    if mask is None:
        lo = m.min(axis=axis, keepdims=True)
        span = m.max(axis=axis, keepdims=True) - lo
        safe = np.where(span > 0, span, 1.0)
        return np.where(span > 0, (m - lo) / safe, 1.0)
    rows, cols, _ = _mask_coords(mask)
    groups, n = (rows, m.shape[0]) if axis == 1 else (cols, m.shape[1])
    out = np.zeros_like(m)
    out[rows, cols], _ = _line_maxmin(m[rows, cols], np.zeros(n), groups, n, 0, "observed")
    return out


def proportioning(m, axis: int = 1, mask=None, form: str = "share") -> np.ndarray:
    """Turn each line into diffusion weights.

    ``share``: entry over the line sum (uniform if the sum is 0).
    ``literal``: line sum over entry; undefined when an entry is 0.
    With a mask only masked entries take part and the rest become 0.
    """
    m = np.asarray(m, dtype=float)
    if mask is None:
        rows, cols = np.indices(m.shape).reshape(2, -1)
    else:
        rows, cols, _ = _mask_coords(mask)
    groups, n = (rows, m.shape[0]) if axis == 1 else (cols, m.shape[1])
    length = np.bincount(groups, minlength=n)
    out = np.zeros_like(m)
    out[rows, cols], _ = _line_proportion(m[rows, cols], np.zeros(n), groups, n, length, form)
    return out


def _mask_coords(mask):
    if isinstance(mask, BipartiteGraph):
        return mask.rows, mask.cols, (mask.m, mask.n)
    if sp.issparse(mask):
        coo = sp.coo_matrix(mask)
        keep = coo.data != 0
        return coo.row[keep], coo.col[keep], coo.shape
    mask = np.asarray(mask)
    rows, cols = np.nonzero(mask)
    return rows, cols, mask.shape


@dataclass(frozen=True)
class WeightPair:
    """Diffusion weights ``W_U`` (row pass) and ``W_I`` (column pass).

    Both are stored as their values on the observed edges (``w_u``, ``w_i``,
    aligned with ``rows``/``cols``) plus one fill value per line that every
    unobserved entry of the line takes: per user row for ``W_U``, per item
    column for ``W_I``.
    """

    shape: tuple[int, int]
    rows: np.ndarray
    cols: np.ndarray
    w_u: np.ndarray
    w_i: np.ndarray
    fill_u: np.ndarray
    fill_i: np.ndarray

    def _edge_matrix(self, values) -> sp.csr_matrix:
        return sp.csr_matrix((values, (self.rows, self.cols)), shape=self.shape)

    def dense(self) -> tuple[np.ndarray, np.ndarray]:
        w_u = np.repeat(self.fill_u[:, None], self.shape[1], axis=1)
        w_i = np.repeat(self.fill_i[None, :], self.shape[0], axis=0)
        w_u[self.rows, self.cols] = self.w_u
        w_i[self.rows, self.cols] = self.w_i
        return w_u, w_i


def diffusion_weights(
    graph: BipartiteGraph,
    edge_values: np.ndarray,
    normalization: str = "maxmin",
    proportioning: str = "share",
    scope: str = "full",
) -> WeightPair:
    """Weights from the similarity values on the observed edges of ``graph``.

    The row pass over ``S o A`` gives ``W_U`` and an independent column pass
    over the same matrix gives ``W_I``. ``scope="full"`` lets the structural
    zeros of each line enter the max-min step and keeps whatever value it
    assigns them; ``scope="observed"`` restricts both steps to edges and
    leaves every unobserved weight at 0.
    """
    if normalization not in NORMALIZATIONS:
        raise ValueError(f"unknown normalization {normalization!r}")
    if proportioning not in PROPORTIONINGS:
        raise ValueError(f"unknown proportioning {proportioning!r}")
    if scope not in SCOPES:
        raise ValueError(f"unknown scope {scope!r}")
    values = np.asarray(edge_values, dtype=float)
    if values.shape != graph.rows.shape:
        raise ValueError("one similarity value per observed edge expected")
    passes = []
    for groups, n, length in ((graph.rows, graph.m, graph.n), (graph.cols, graph.n, graph.m)):
        counts = np.bincount(groups, minlength=n)
        if scope == "observed":
            length = counts
        w, fill = values, np.zeros(n)
        if normalization == "maxmin":
            w, fill = _line_maxmin(w, fill, groups, n, length, scope)
        if proportioning != "none":
            w, fill = _line_proportion(w, fill, groups, n, length, proportioning)
        # lines without gaps have no unobserved entry to fill
        passes.append((w, np.where(counts < length, fill, 0.0)))
    (w_u, fill_u), (w_i, fill_i) = passes
    return WeightPair((graph.m, graph.n), graph.rows, graph.cols, w_u, w_i, fill_u, fill_i)


def weighted_predict(a, weights: WeightPair) -> np.ndarray:
    """``R = A W_I^T W_U`` with fill values expanded implicitly.

    Writing ``W_U = D_U + c_U 1^T`` and ``W_I = D_I + 1 c_I^T`` where the D
    parts live on edges only, ``W_I^T W_U`` is a sparse product plus three
    rank-one corrections.
    """
    a = _adjacency(a)
    m, n = weights.shape
    c_u, c_i = weights.fill_u, weights.fill_i
    d_u = weights._edge_matrix(weights.w_u - c_u[weights.rows])
    d_i = weights._edge_matrix(weights.w_i - c_i[weights.cols])
    t = (d_i.T @ d_u).toarray()
    if np.any(c_u) or np.any(c_i):
        t += c_u.sum() * np.outer(c_i, np.ones(n))
        t += np.outer(c_i, np.asarray(d_u.sum(axis=0)).ravel())
        t += np.asarray(d_i.T @ c_u).ravel()[:, None]
    return np.asarray(a @ t)


def aiprobs_predict(
    graph: BipartiteGraph,
    f_u,
    f_i,
    metric: str = "cosine",
    normalization: str = "maxmin",
    proportioning: str = "share",
    scope: str = "full",
) -> np.ndarray:
    """AIProbS scores for every user-item pair of ``graph``'s index space."""
    f_u, f_i = _check_widths(f_u, f_i)
    if f_u.shape[0] != graph.m or f_i.shape[0] != graph.n:
        raise ValueError("representation rows do not match the graph's users and items")
    values = edge_similarity(f_u, f_i, graph.rows, graph.cols, metric)
    return weighted_predict(graph, diffusion_weights(graph, values, normalization, proportioning, scope))


def pure_dhc_predict(f_u, f_i) -> np.ndarray:
    """Score every pair by the cosine similarity of the representations."""
    return similarity(f_u, f_i, "cosine")
