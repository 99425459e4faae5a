# %% [markdown]
# # MovieLens 100K comparison
#
# Needs ``ml-100k.inter`` (see ``tools/fetch_data.py``). Uses five
# realizations to stay quick; the full protocol uses 30.

# %%
import dataclasses
import os

from aiprobs.experiment import RunConfig, combination_grid, run_matrix

path = os.path.join(os.environ.get("AIPROBS_DATA_DIR", "/root/data"), "ml-100k.inter")
base = RunConfig(dataset=path, realizations=5)

# %%
table = run_matrix([dataclasses.replace(base, model=m) for m in ("probs", "aiprobs", "pure-dhc")])
print(table.render())

# %% [markdown]
# The similarity x normalisation x proportioning grid on the same splits.

# %%
print(run_matrix(combination_grid(dataclasses.replace(base, realizations=2))).render())
