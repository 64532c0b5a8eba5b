# %% [markdown]
# # Closeness testing with both sides unknown
#
# Runs at the desk-scale constants. The paper-formula preset is listed for
# comparison; its equality tests need batches far beyond what can be simulated.

# %%
import numpy as np

from condtest.closeness import ClosenessConstants, ClosenessParams
from condtest.harness import run_trials

alpha, beta = 1 / (4 * np.log(32)), 0.0625
for name, consts in (("default", ClosenessConstants()), ("paper", ClosenessConstants.paper())):
    pr = ClosenessParams(4096, 0.5, 0.2, alpha, beta, consts)
    print(f"{name:8s} gamma={pr.gamma:9.3g} m={pr.m:<10.3g} n1={pr.n1(pr.m):<8d} n2={pr.n2:<5d} "
          f"n3={pr.n3:<10d} n4={pr.n4:<10d} chi_pair={pr.chi_pair:.3g} chi_set={pr.chi_set:.3g}")

# %% Verdicts at k = 4096
for gen in ("uniform", "two-bump"):
    recs = run_trials(gen, "closeness", 4096, 0.5, 0.2, 3, seed=0)
    print(gen, [r.verdict for r in recs], f"median queries {np.median([r.queries for r in recs]):.3e}")

# %% Growth in k: the number of distinct pair tests tracks |S| ~ sqrt(k) at these sizes
for k in (2**8, 2**12, 2**16):
    recs = run_trials("uniform", "closeness", k, 0.5, 0.2, 2, seed=1)
    print(f"k=2^{int(np.log2(k)):<3d} median queries {np.median([r.queries for r in recs]):.3e}")
