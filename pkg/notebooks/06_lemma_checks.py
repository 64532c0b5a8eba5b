# %% [markdown]
# # Numerical lemma checks
#
# Sweeps the chi-squared lower bound, the approximability sum and the moments
# of the single-term statistic. The same report comes from `condtest verify-lemmas`.

# %%
from condtest.harness import verify_lemmas
from condtest.reference import load_lemma_constants

rep = verify_lemmas(0)
print("passed:", rep["passed"])
print("chilow:", rep["chilow"])
print("exp_approx:", rep["exp_approx"])
for row in rep["moments"]:
    print(f"  lam=({row['lam1']:>4}, {row['lam2']:>4})  mean {row['mean']:8.4f}  "
          f"expected {row['expected_mean']:8.4f}  z {row['z']:6.2f}")
print("fitted c:", rep["var_c"], " snapshot:", load_lemma_constants().var_c)
