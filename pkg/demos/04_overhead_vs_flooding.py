# %% [markdown]
# # Control overhead against flooding
#
# Both protocols see exactly the same traffic for a given seed.  Control
# overhead counts every transmission except data and acknowledgements.  A
# broadcast counts once.  This is a small version of the pause-time sweep; the
# CLI runs the full grid (`jbrsim sweep`).
#
# The byte gap is wide because flood requests carry the whole path so far.
# The packet gap is narrow, and a single seed can land on either side of it,
# so compare means over several seeds.

# %%
from jbrsim.config import ScenarioConfig
from jbrsim.harness import SweepSpec, run_sweep, summarize

spec = SweepSpec(pause_times=(60.0, 900.0), node_counts=(50,), seeds=(1, 2), protocols=("jbr", "flood"))
records = run_sweep(spec, ScenarioConfig())
for row in summarize(records):
    m = row.means
    print(
        f"{row.protocol:5s} pause {row.pause_time:4.0f}s  control packets {m['control_packet_count']:8.0f}"
        f"  control bytes {m['control_byte_count']:10.0f}  delivery {m['delivery_ratio']:.3f}"
    )
