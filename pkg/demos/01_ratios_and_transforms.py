"""
Synergy ratios and metric transforms
====================================

A team of a person and a model is *synergistic* on a task when it beats the
better of the two working alone. This script walks through the ratio on a few
hand-picked triples and shows what the bound transforms do to it.
"""

# %%
# The plain ratio
# ---------------
# Accuracy of 57% for people alone, 50% for the model alone and 78% together.
from hcsynergy import Direction, MetricSpec, PerformanceTriple, compute_rho_hat, transform_pipeline

unit = MetricSpec("accuracy", Direction.HIGHER_BETTER, lower_bound=0.0, upper_bound=1.0)
result = compute_rho_hat(PerformanceTriple(0.57, 0.50, 0.78, unit))
print(f"rho_hat  = {result.rho_hat:.4f}  (baseline: {result.baseline_label})")

# %%
# Near a ceiling, a few points of accuracy are worth more than they look.
# The odds transform rescales onto [0, 1] and maps ``x`` to ``x / (1 - x)``,
# which stretches the top of the scale.
print(f"rho_hat' = {result.rho_hat_prime:.4f}")
for x in (0.50, 0.78, 0.95, 0.99):
    print(f"  odds({x:.2f}) = {transform_pipeline(x, unit):.3f}")

# %%
# The transform never changes which baseline wins, and it pushes every ratio
# away from one by the factor ``(1 - y) / (1 - x)``.
team, best = 0.78, 0.57
print("multiplier:", result.rho_hat_prime / result.rho_hat, "=", (1 - best) / (1 - team))

# %%
# Lower-is-better metrics
# -----------------------
# For counts such as steps taken, fewer is better. ``1 / (x - x_min)`` turns
# the metric around before the ratio is formed.
steps = MetricSpec("steps", Direction.LOWER_BETTER, lower_bound=0.0)
r = compute_rho_hat(PerformanceTriple(37.82, 34.0, 38.37, steps))
print(f"raw ratio {r.rho:.3f}, transformed {r.rho_hat:.3f}: the team took more steps")

# %%
# When neither baseline can do the task
# -------------------------------------
# If people alone and the model alone both score zero, any positive team
# performance gives an unbounded ratio.
speed = MetricSpec("tasks per minute", Direction.HIGHER_BETTER)
r = compute_rho_hat(PerformanceTriple(0.0, 0.0, 0.030, speed, h_impossible=True, c_impossible=True))
print("rho_hat =", r.to_dict()["rho_hat"])
