# %% [markdown]
# # Conditional sampling oracles
#
# An oracle hides a distribution and answers "sample from p restricted to S".
# Every answer costs one query; batch counts are charged per draw.

# %%
import numpy as np

from condtest.distributions import CondOracle, Distribution, InducedOracle, MixtureOracle, Partition

rng = np.random.default_rng(0)
p = Distribution([0.2, 0.3, 0.5])
oracle = CondOracle(p, rng)

# %% Conditioning on {1, 3}: element 1 should show up 2/7 of the time
draws = oracle.sample([1, 3], size=20_000)
print("freq(1 | {1,3}) =", np.mean(draws == 1), " exact =", 0.2 / 0.7)
print("queries so far:", oracle.queries)

# %% Hit counts in batches: one binomial per batch, same law as drawing one by one
hits = oracle.count([1, 3], [1], np.array([100, 1000, 10_000]))
print("hits:", hits, " queries:", oracle.queries)

# %% Induced oracle: groups become elements
part = Partition(([1, 2], [3]))
induced = InducedOracle(oracle, part)
g = induced.sample(None, size=10_000)
print("induced freq of group 1:", np.mean(g == 1), " exact = 0.5")

# %% Mixture r = (p + q) / 2: each sample is charged to exactly one side
left = CondOracle(Distribution([0.8, 0.2]), rng)
right = CondOracle(Distribution([0.4, 0.6]), rng)
mix = MixtureOracle(left, right, rng)
m = mix.sample(None, size=10_000)
print("mixture freq(1) =", np.mean(m == 1), " exact = 0.6")
print("charged:", left.queries, "+", right.queries, "=", mix.queries)

# %% Zero-mass query sets fall back to uniform and are flagged
zero = CondOracle(Distribution([1.0, 0.0, 0.0]), rng)
zero.sample([2, 3], size=10)
print("zero-mass draws recorded:", zero.zero_mass_queries)
