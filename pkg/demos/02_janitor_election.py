# %% [markdown]
# # Janitor election
#
# After a hello exchange every node knows its neighbours' degrees.  It follows
# the best node in its closed neighbourhood (highest degree, lowest id on a
# tie).  A node that picks itself is a janitor.  A node that somebody registers
# with becomes a janitor too.

# %%
import numpy as np

from jbrsim.config import ScenarioConfig
from jbrsim.jbr import make_jbr_agent
from jbrsim.simcore import Network

cfg = ScenarioConfig(node_count=30, static=True, flow_count=0, field_width=700, field_height=700, rng_seed=2)
net = Network(cfg, make_jbr_agent)
net.run_until(1.0)

janitors = sorted(a.id for a in net.agents if a.is_janitor)
print("janitors:", janitors)
for a in net.agents[:10]:
    print(f"node {a.id:2d} degree {net.graph.degree(a.id)} -> janitor {a.my_janitor}")

# %% [markdown]
# Two nodes alone in range are each other's janitor.

# %%
pair = Network(
    ScenarioConfig(node_count=2, static=True, flow_count=0),
    make_jbr_agent,
    positions=np.array([[100.0, 100.0], [300.0, 100.0]]),
)
pair.run_until(0.1)
print([(a.id, a.is_janitor, a.my_janitor) for a in pair.agents])

# %% [markdown]
# Message counts of the election itself:

# %%
print({k: v for k, v in net.stats.tx_count.items()})
