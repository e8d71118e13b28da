"""
Estimating the ratio with a mixed model
=======================================

In a crossover experiment every person does two tasks, one with help and one
without. If speed is multiplicative in ability, task difficulty, help and
practice, then on the log scale it is additive, and ``exp`` of the condition
coefficient is the ratio of means. A random intercept absorbs each person's
ability.
"""

# %%
from hcsynergy import SimConfig, fit_lmm, fit_ols, generate
from hcsynergy.regression import format_table

config = SimConfig(n_subjects=97, condition_effect=1.27, ability_log_sd=0.2, error_log_sd=0.3,
                   base_seed=11)
data = generate(config)
print(data[:4])

# %%
fit = fit_lmm(data)
print(format_table(fit))
lo, hi = fit.condition_ratio_ci
print(f"ratio {fit.condition_ratio:.3f}, 95% CI [{lo:.3f}, {hi:.3f}]")

# %%
# Ordinary least squares gives the same point estimate on a balanced
# crossover, but ignores that the two rows of one person are correlated; its
# standard errors for the within-person effects are too large.
ols = fit_ols(data)
print(f"SE of condition: mixed {fit.coefficients['Condition'].se:.4f}, "
      f"OLS {ols.coefficients['Condition'].se:.4f}")

# %%
# REML changes the variance components, and barely the coefficients.
reml = fit_lmm(data, method="REML")
print(f"subject sd: ML {fit.random_effect.sd:.4f}, REML {reml.random_effect.sd:.4f}")
