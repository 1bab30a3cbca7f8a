# %% [markdown]
# # Closed-form reliability model
#
# Each formula is a pure function.  Where a Monte Carlo oracle exists, the
# estimate is shown next to the closed form with its 95% half width.

# %%
from jbrsim import analytics as an
from jbrsim.harness import evaluate_analytics

params = an.AnalyticParams(mu=0.2, lambda_rate=1.0)
for row in evaluate_analytics(params, mc=True, trials=200_000, seed=1):
    mc = "" if row.mc_estimate is None else f"   mc {row.mc_estimate:.4f} +/- {row.mc_half_width:.4f}"
    value = "undefined" if row.value is None else f"{row.value:.4f}"
    print(f"{row.formula:24s} {row.variant:13s} {value}{mc}")

# %% [markdown]
# Discovery success rises with the per-hop success probability and with the
# number of janitors that help.

# %%
for e_n in (0, 1, 2, 4, 8):
    print(e_n, [round(an.p_discovery_success(p0, 3, e_n), 3) for p0 in (0.05, 0.1, 0.2, 0.4)])
