"""
Confidence intervals for a ratio of means
=========================================

Three standard constructions are compared on summary statistics, then checked
by simulation.
"""

# %%
import math

import numpy as np

from hcsynergy import SampleSummary, proportion_test, ratio_ci

# %%
# Two independent groups of 97 people, speeds in tasks per minute.
team = SampleSummary(n=97, mean=0.032, sd=0.012)
alone = SampleSummary(n=97, mean=0.027, sd=0.011)
for method in ("fieller", "delta", "recommended"):
    ci = ratio_ci(team, alone, method)
    print(f"{method:<12} {ci.estimate:.3f} [{ci.lower:.3f}, {ci.upper:.3f}]")

# %%
# The same people under both conditions: a positive correlation between the
# paired measurements narrows every interval.
for r in (0.0, 0.5, 0.8):
    a, b = SampleSummary(97, 0.032, 0.012, r), SampleSummary(97, 0.027, 0.011, r)
    ci = ratio_ci(a, b, "recommended", design="paired")
    print(f"r={r:.1f}  [{ci.lower:.3f}, {ci.upper:.3f}]")

# %%
# Coverage by simulation
# ----------------------
# Skewed (lognormal) data, 50 per group. The true ratio of means is 1.3.
rng = np.random.default_rng(1)
truth, reps, n = 1.3, 2000, 50
hits = dict.fromkeys(("fieller", "delta", "recommended"), 0)
for _ in range(reps):
    x = SampleSummary.from_data(rng.lognormal(math.log(truth), 0.5, n))
    y = SampleSummary.from_data(rng.lognormal(0.0, 0.5, n))
    for m in hits:
        hits[m] += ratio_ci(x, y, m).contains(truth)
print({m: h / reps for m, h in hits.items()})

# %%
# A one-sided test of a success rate
# ----------------------------------
# 91 of 96 submissions were correct. Is that better than a coin flip?
res = proportion_test(91, 96, p0=0.5)
print(f"p_hat={res.p_hat:.3f} z={res.z:.2f} p={res.p_value:.2e}")
