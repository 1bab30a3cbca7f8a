# %% [markdown]
# # Routing through janitors
#
# A source hands non-local traffic to its janitor.  The janitor forwards
# directly if the destination is next to it, source-routes from its cache, or
# queries the other janitors.  Under mobility, broken links send a route error
# back to the source, which repairs the route.

# %%
from jbrsim.config import ScenarioConfig
from jbrsim.jbr import make_jbr_agent
from jbrsim.simcore import Network

for label, cfg in [
    ("static", ScenarioConfig(static=True, rng_seed=8, sim_duration=300.0)),
    ("mobile, pause 30s", ScenarioConfig(pause_time=30.0, rng_seed=8, sim_duration=300.0)),
]:
    stats = Network(cfg, make_jbr_agent).run_until(cfg.sim_duration)
    ev = stats.events
    print(
        f"{label:18s} delivered {len(stats.delivered)}/{stats.generated}"
        f"  queries {ev['query_started']} (answered {ev['query_succeeded']})"
        f"  cache hits {ev['cache_hit']}  route errors {ev['route_error']}"
        f"  unreachable {ev['route_unreachable']}"
    )
