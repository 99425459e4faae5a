import numpy as np
import numpy.testing as npt
import pytest
from hypothesis import given, settings, strategies as st

from aiprobs.diffusion import (
    METRICS,
    aiprobs_predict,
    diffusion_operator,
    diffusion_weights,
    edge_similarity,
    iterate_to_fixpoint,
    maxmin_normalize,
    probs_predict,
    proportioning,
    pure_dhc_predict,
    similarity,
)
from aiprobs.graph import BipartiteGraph

TOY = np.array([[1, 1, 0], [0, 1, 1]], float)


def resource_flow(a):
    """ProbS by following one unit of resource per item, edge by edge."""
    m, n = a.shape
    r = np.zeros((m, n))
    for u in range(m):
        on_users = np.zeros(m)
        for j in range(n):
            if a[u, j]:
                holders = [v for v in range(m) if a[v, j]]
                for v in holders:
                    on_users[v] += 1.0 / len(holders)
        for v in range(m):
            items = [k for k in range(n) if a[v, k]]
            for k in items:
                r[u, k] += on_users[v] / len(items)
    return r


def line_maxmin(x, keep):
    """Rescale x[keep] to [0, 1]; a constant line maps to 1, dropped entries to 0."""
    out = np.zeros_like(x)
    vals = x[keep]
    if vals.size:
        lo, hi = vals.min(), vals.max()
        out[keep] = 1.0 if hi == lo else (vals - lo) / (hi - lo)
    return out


def line_share(x, keep):
    out = np.zeros_like(x)
    total = x[keep].sum()
    if keep.any():
        out[keep] = x[keep] / total if total != 0 else 1.0 / keep.sum()
    return out


def reference_aiprobs(a, f_u, f_i, metric, normalization="maxmin", prop="share", scope="full"):
    """Line-by-line transcription of the weighting pipeline with explicit loops."""
    m, n = a.shape
    sa = similarity(f_u, f_i, metric) * a
    w_u, w_i = np.zeros((m, n)), np.zeros((m, n))
    for u in range(m):
        keep = np.ones(n, bool) if scope == "full" else a[u] > 0
        x = line_maxmin(sa[u], keep) if normalization == "maxmin" else np.where(keep, sa[u], 0.0)
        w_u[u] = line_share(x, keep) if prop == "share" else x
    for j in range(n):
        keep = np.ones(m, bool) if scope == "full" else a[:, j] > 0
        x = line_maxmin(sa[:, j], keep) if normalization == "maxmin" else np.where(keep, sa[:, j], 0.0)
        w_i[:, j] = line_share(x, keep) if prop == "share" else x
    return a @ w_i.T @ w_u


def random_instance(rng, m, n, density=0.5, width=4):
    a = (rng.random((m, n)) < density).astype(float)
    return a, rng.random((m, width)) * 3, rng.random((n, width)) * 3


class TestProbS:
    def test_toy_prediction(self):
        npt.assert_allclose(probs_predict(TOY), [[0.75, 1.0, 0.25], [0.25, 1.0, 0.75]], atol=1e-15)

    def test_toy_operator(self):
        npt.assert_allclose(diffusion_operator(TOY), [[0.5, 0.5, 0], [0.25, 0.5, 0.25], [0, 0.5, 0.5]], atol=1e-15)

    def test_single_cell(self):
        npt.assert_array_equal(diffusion_operator([[1.0]]), [[1.0]])

    def test_zero_row(self):
        a = np.array([[1, 0, 1], [0, 0, 0], [1, 1, 0]], float)
        npt.assert_array_equal(probs_predict(a)[1], 0)

    @settings(max_examples=40, deadline=None)
    @given(st.integers(0, 2**32 - 1), st.integers(1, 7), st.integers(1, 9))
    def test_resource_flow_oracle(self, seed, m, n):
        a = (np.random.default_rng(seed).random((m, n)) < 0.5).astype(float)
        r = probs_predict(a)
        npt.assert_allclose(r, resource_flow(a), atol=1e-12)
        t = diffusion_operator(a)
        live = a.sum(axis=0) > 0
        npt.assert_allclose(t[live].sum(axis=1), 1.0, atol=1e-12)
        npt.assert_array_equal(t[~live], 0)
        npt.assert_allclose(r.sum(axis=1), a.sum(axis=1), atol=1e-10)

    def test_sparse_and_graph_inputs(self):
        g = BipartiteGraph.from_dense(TOY)
        npt.assert_allclose(probs_predict(g), probs_predict(TOY))
        npt.assert_allclose(diffusion_operator(g, dense=False).toarray(), diffusion_operator(TOY))


class TestFixpoint:
    def test_toy_strictly_decreasing(self):
        d = iterate_to_fixpoint(TOY, epsilon=1e-10)
        assert d[-1] < 1e-10
        assert all(x > y for x, y in zip(d, d[1:]))

    def test_already_fixed(self):
        a = np.ones((2, 3))
        assert iterate_to_fixpoint(a) == [0.0]

    def test_non_increasing_random(self):
        rng = np.random.default_rng(11)
        for _ in range(5):
            a = np.ones((4, 5))
            a[rng.random((4, 5)) < 0.3] = 0
            a[:, 0] = 1
            d = iterate_to_fixpoint(a)
            assert d[-1] < 1e-10 and len(d) <= 10_000
            assert np.all(np.diff(d) <= 1e-15)


class TestSimilarity:
    def test_cosine_cases(self):
        assert similarity([[1.0, 2.0]], [[1.0, 2.0]])[0, 0] == pytest.approx(1.0)
        assert similarity([[1.0, 0.0]], [[0.0, 3.0]])[0, 0] == 0.0
        assert similarity([[1.0, 2.0]], [[2.0, 1.0]])[0, 0] == pytest.approx(0.8, abs=1e-15)

    def test_zero_norm(self):
        assert similarity([[0.0, 0.0]], [[1.0, 1.0]], "cosine")[0, 0] == 0.0
        assert similarity([[2.0, 2.0]], [[1.0, 3.0]], "pearson")[0, 0] == 0.0

    def test_width_mismatch(self):
        with pytest.raises(ValueError):
            similarity(np.ones((2, 3)), np.ones((2, 4)))
        with pytest.raises(ValueError):
            pure_dhc_predict(np.ones((2, 3)), np.ones((2, 4)))

    def test_unknown(self):
        with pytest.raises(ValueError):
            similarity(np.ones((1, 2)), np.ones((1, 2)), "jaccard")

    def test_against_numpy(self):
        rng = np.random.default_rng(0)
        u, v = rng.normal(size=(4, 6)), rng.normal(size=(5, 6))
        npt.assert_allclose(similarity(u, v, "dot"), u @ v.T)
        npt.assert_allclose(similarity(u, v, "pearson"), np.corrcoef(u, v)[:4, 4:], atol=1e-12)
        cov = np.array([[np.cov(x, y, bias=True)[0, 1] for y in v] for x in u])
        npt.assert_allclose(similarity(u, v, "cov"), cov, atol=1e-12)
        nu, nv = np.linalg.norm(u, axis=1), np.linalg.norm(v, axis=1)
        npt.assert_allclose(similarity(u, v, "euclidean"), np.sqrt(np.abs(-2 * u @ v.T + nu[:, None] + nv)))
        # with unit-norm rows the printed form is the ordinary distance
        un, vn = u / nu[:, None], v / nv[:, None]
        dist = np.linalg.norm(un[:, None, :] - vn[None, :, :], axis=2)
        npt.assert_allclose(similarity(un, vn, "euclidean"), dist, atol=1e-7)

    @pytest.mark.parametrize("metric", METRICS)
    def test_edge_gather(self, metric):
        rng = np.random.default_rng(1)
        u, v = rng.random((5, 3)), rng.random((6, 3))
        rows, cols = np.nonzero(rng.random((5, 6)) < 0.5)
        npt.assert_allclose(edge_similarity(u, v, rows, cols, metric), similarity(u, v, metric)[rows, cols], atol=1e-12)

    def test_scale_invariance_of_rankings(self):
        rng = np.random.default_rng(2)
        a, f_u, f_i = random_instance(rng, 6, 8)
        g = BipartiteGraph.from_dense(a)
        npt.assert_allclose(aiprobs_predict(g, f_u, f_i), aiprobs_predict(g, 7.5 * f_u, 7.5 * f_i), atol=1e-12)


class TestNormalization:
    def test_maxmin_row(self):
        npt.assert_allclose(maxmin_normalize([[0.2, 0.6, 1.0]], mask=[[1, 1, 1]]), [[0, 0.5, 1]], atol=1e-15)

    def test_tie(self):
        npt.assert_array_equal(maxmin_normalize([[0.4, 0.4]], mask=[[1, 1]]), [[1, 1]])

    def test_outside_mask(self):
        out = maxmin_normalize([[0.2, 9.0, 1.0]], mask=[[1, 0, 1]])
        npt.assert_array_equal(out, [[0, 0, 1]])

    def test_columns(self):
        m = np.array([[1.0, 5.0], [3.0, 5.0]])
        npt.assert_array_equal(maxmin_normalize(m, axis=0), [[0, 1], [1, 1]])

    def test_share(self):
        npt.assert_allclose(proportioning([[0, 0.5, 1]], mask=[[0, 1, 1]]), [[0, 1 / 3, 2 / 3]], atol=1e-15)

    def test_uniform(self):
        npt.assert_allclose(proportioning([[0.7, 0.7, 0.7, 0.7]]), [[0.25] * 4])

    def test_literal(self):
        npt.assert_allclose(proportioning([[1.0, 3.0]], form="literal"), [[4.0, 4 / 3]])
        with pytest.raises(ValueError):
            proportioning(maxmin_normalize([[0.2, 0.5, 0.9]]), form="literal")


class TestAIProbS:
    @settings(max_examples=25, deadline=None)
    @given(st.integers(0, 2**32 - 1), st.sampled_from(METRICS), st.sampled_from(["full", "observed"]))
    def test_matches_loop_reference(self, seed, metric, scope):
        rng = np.random.default_rng(seed)
        a, f_u, f_i = random_instance(rng, 6, 8, density=rng.uniform(0.2, 0.9))
        g = BipartiteGraph.from_dense(a)
        got = aiprobs_predict(g, f_u, f_i, metric, scope=scope)
        npt.assert_allclose(got, reference_aiprobs(a, f_u, f_i, metric, scope=scope), atol=1e-12)

    @pytest.mark.parametrize("metric", ["cosine", "dot", "euclidean"])
    @pytest.mark.parametrize("normalization, prop", [("maxmin", "none"), ("none", "none"), ("none", "share")])
    def test_other_switches(self, metric, normalization, prop):
        rng = np.random.default_rng(4)
        a, f_u, f_i = random_instance(rng, 7, 9)
        g = BipartiteGraph.from_dense(a)
        got = aiprobs_predict(g, f_u, f_i, metric, normalization, prop)
        npt.assert_allclose(got, reference_aiprobs(a, f_u, f_i, metric, normalization, prop), atol=1e-12)

    @pytest.mark.parametrize("scope", ["full", "observed"])
    def test_constant_similarity_is_probs(self, scope):
        rng = np.random.default_rng(5)
        for _ in range(10):
            a = (rng.random((6, 8)) < 0.5).astype(float)
            g = BipartiteGraph.from_dense(a)
            ones = np.ones((6, 3)), np.ones((8, 3))
            npt.assert_allclose(aiprobs_predict(g, *ones, scope=scope), probs_predict(a), atol=1e-12, rtol=0)

    def test_weights_sum_to_one_and_vanish_off_edges(self):
        rng = np.random.default_rng(6)
        a, f_u, f_i = random_instance(rng, 9, 11, density=0.4)
        g = BipartiteGraph.from_dense(a)
        w = diffusion_weights(g, edge_similarity(f_u, f_i, g.rows, g.cols))
        w_u, w_i = w.dense()
        live_u, live_i = a.sum(axis=1) > 0, a.sum(axis=0) > 0
        npt.assert_allclose(w_u[live_u].sum(axis=1), 1.0, atol=1e-10)
        npt.assert_allclose(w_i[:, live_i].sum(axis=0), 1.0, atol=1e-10)
        assert np.all(w_u[a == 0] == 0) and np.all(w_i[a == 0] == 0)
        assert np.all(w_u >= 0) and np.all(w_i >= 0)

    def test_zero_degree_user(self):
        rng = np.random.default_rng(7)
        a, f_u, f_i = random_instance(rng, 5, 6)
        a[2] = 0
        r = aiprobs_predict(BipartiteGraph.from_dense(a), f_u, f_i)
        npt.assert_array_equal(r[2], 0)

    def test_share_needs_nonnegative(self):
        rng = np.random.default_rng(8)
        a, f_u, f_i = random_instance(rng, 5, 6, density=0.8)
        with pytest.raises(ValueError):
            aiprobs_predict(BipartiteGraph.from_dense(a), f_u - 1.5, f_i, "dot", normalization="none")

    def test_shape_mismatch(self):
        a, f_u, f_i = random_instance(np.random.default_rng(9), 5, 6)
        with pytest.raises(ValueError):
            aiprobs_predict(BipartiteGraph.from_dense(a), f_u[:4], f_i)


class TestPureDHC:
    def test_identical_vectors_rank_first(self):
        f_u = np.array([[1.0, 2.0, 3.0]])
        f_i = np.array([[3.0, 1.0, 1.0], [1.0, 2.0, 3.0], [0.0, 1.0, 0.0]])
        r = pure_dhc_predict(f_u, f_i)
        assert r[0, 1] == pytest.approx(1.0)
        assert np.argmax(r[0]) == 1
