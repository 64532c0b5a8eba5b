# %% [markdown]
# # Find-element
#
# A handful of samples paired with a schedule of (beta, alpha) levels. At least
# one tuple should land on a heavy element whose weight a_x clears its beta.

# %%
import numpy as np

from condtest.finder import find_element, pickgood_weights, schedule, tail_masses
from condtest.generators import parse_generator

betas, alphas = schedule(0.5)
print("m =", betas.size)
print("first betas:", betas[:4], " first alphas:", np.round(alphas[:4], 4))

# %% Success fraction on the spike pair
rng = np.random.default_rng(2)
eps, k = 0.5, 1000
p, q = parse_generator("spike").build(k, eps, rng)
a = pickgood_weights(p, q)
tails = tail_masses(p)


def good(tuples):
    return any(tails[t.element - 1] >= t.alpha and a[t.element - 1] >= t.beta for t in tuples)


runs = 5000
rate = np.mean([good(find_element(p, eps, rng=rng)) for _ in range(runs)])
print(f"sum p*a = {p.probs @ a:.3f} (needs >= {eps / 4}); success = {rate:.3f} (needs >= 0.2)")
