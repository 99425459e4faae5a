# %% [markdown]
# # Node representations from H-index sequences
#
# A small user-item graph, its augmented adjacency, the H-index table
# (method one) and the entropy embeddings of the spectral idempotents
# (method two).

# %%
import numpy as np

from aiprobs import BipartiteGraph, augment, h_index_sequences, method_two_representations, spectral_decompose
from aiprobs.dhc import coreness_oracle

edges = [(0, 0), (0, 1), (0, 2), (1, 0), (1, 1), (2, 1), (2, 3), (3, 3), (3, 4)]
g = BipartiteGraph.from_edges(4, 5, edges)
print("user degrees", g.k_u, "item degrees", g.k_i)

# %% [markdown]
# Column 0 is the degree; each later column applies the H operator to the
# neighbours' previous values. The last column is the coreness.

# %%
table = h_index_sequences(g)
print(table.values)
print("coreness from peeling:", coreness_oracle(g))

# %% [markdown]
# Method two: the augmented matrix splits into rank-one idempotents.

# %%
b = augment(g)
d = spectral_decompose(b)
print("eigenvalues", np.round(d.eigenvalues, 3))
print("reconstruction error", np.abs(d.reconstruct() - b).max())
f_u, f_i = method_two_representations(g)
print("user embeddings\n", np.round(f_u, 3))
