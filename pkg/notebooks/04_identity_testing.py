# %% [markdown]
# # Identity testing against a known distribution
#
# Only q is reached through the oracle; p is known. The query count depends
# on eps and delta but not on the domain size.

# %%
import numpy as np

from condtest.harness import run_trials
from condtest.identity import build_grouping
from condtest.distributions import Distribution

g = build_grouping(Distribution([0.4, 0.2, 0.2, 0.1, 0.1]), 2)
print("groups of G_2:", [g.group(i).tolist() for i in range(len(g))], "masses", g.masses)

# %% Verdicts on an equal pair and two far pairs
for gen in ("zipf", "two-bump", "spike"):
    recs = run_trials(gen, "identity", 1000, 0.5, 0.2, 10, seed=0)
    diff = sum(r.verdict == "diff" for r in recs)
    print(f"{gen:9s} diff {diff}/10  median q-queries {np.median([r.queries_q for r in recs]):.3e}")

# %% Flat in k
for k in (100, 10_000, 1_000_000):
    recs = run_trials("uniform", "identity", k, 0.5, 0.2, 3, seed=1)
    print(f"k={k:>9,d}  median queries {np.median([r.queries for r in recs]):.3e}")
