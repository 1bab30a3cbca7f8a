# %% [markdown]
# # Event engine, mobility and the radio graph
#
# The simulator is driven by a single priority queue.  Events fire in order of
# time, and events scheduled for the same instant fire in the order they were
# scheduled, so every run is reproducible from its seed.

# %%
from jbrsim.simcore import EventQueue

q = EventQueue()
log = []
q.schedule(2.0, "demo", log.append, "late")
q.schedule(1.0, "demo", log.append, "first at t=1")
q.schedule(1.0, "demo", log.append, "second at t=1")
q.run_until(5.0)
print(log, "clock:", q.now)

# %% [markdown]
# Nodes follow random-waypoint motion.  Connectivity is a unit-disk graph that
# is rebuilt once per second and whenever a node reaches a waypoint.  Nodes at
# exactly the transmission range are connected.

# %%
import numpy as np

from jbrsim.config import ScenarioConfig
from jbrsim.simcore import RandomWaypoint, unit_disk

cfg = ScenarioConfig(node_count=50, pause_time=60.0, rng_seed=4)
rw = RandomWaypoint(cfg, np.random.default_rng(4))
for t in (0.0, 30.0, 120.0):
    adj = unit_disk(rw.positions(t), cfg.tx_range)
    degrees = adj.sum(axis=1)
    print(f"t={t:5.0f}s  edges={adj.sum() // 2:4d}  mean degree={degrees.mean():.2f}  isolated={int((degrees == 0).sum())}")
