# %% [markdown]
# # ProbS and AIProbS on a toy graph

# %%
import numpy as np

from aiprobs import BipartiteGraph, aiprobs_predict, diffusion_operator, probs_predict
from aiprobs.dhc import method_one_representations
from aiprobs.diffusion import diffusion_weights, edge_similarity

a = np.array([[1, 1, 0, 0], [0, 1, 1, 0], [1, 0, 1, 1], [0, 0, 1, 1], [1, 1, 1, 0]], float)
g = BipartiteGraph.from_dense(a)

# %% [markdown]
# ProbS: every item a user holds sends one unit of resource, split equally
# among its users, who split it equally among their items.

# %%
print("T =\n", np.round(diffusion_operator(a), 3))
r = probs_predict(a)
print("row sums", r.sum(axis=1), "degrees", a.sum(axis=1))

# %% [markdown]
# AIProbS replaces the equal splits by weights from representation
# similarity. With every representation equal the weights become 1/degree.

# %%
f_u, f_i = method_one_representations(g)
w_u, w_i = diffusion_weights(g, edge_similarity(f_u, f_i, g.rows, g.cols)).dense()
print("W_U =\n", np.round(w_u, 3))
print("AIProbS\n", np.round(aiprobs_predict(g, f_u, f_i), 3))
flat = np.ones_like(f_u), np.ones_like(f_i)
print("constant similarity matches ProbS:", np.allclose(aiprobs_predict(g, *flat), r))

# %% [markdown]
# Resource on a connected graph keeps spreading towards a fixed point.

# %%
from aiprobs import iterate_to_fixpoint

d = iterate_to_fixpoint(a)
print(len(d), "steps, last distance", d[-1])
