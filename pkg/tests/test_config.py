import dataclasses

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from jbrsim.config import ConfigError, ScenarioConfig, WireSizes, dump_config, load_config, parse_config


def test_defaults_match_experiment_setup():
    c = ScenarioConfig()
    assert (c.field_width, c.field_height, c.node_count) == (1300.0, 1300.0, 50)
    assert c.flow_count == 10 and c.payload_bytes == 64
    assert c.query_timeout == 2.0 and c.request_timeout == 2.0 and c.request_retries == 2


@pytest.mark.parametrize(
    "changes",
    [
        {"tx_range": 0},
        {"node_count": 1},
        {"speed_min": 5, "speed_max": 1},
        {"pause_time": -1},
        {"hop_limit": 0},
        {"traffic_rate": -0.5},
        {"timer_alive": 0},
        {"rng_seed": -1},
        {"field_width": 0},
    ],
)
def test_invalid_settings_rejected(changes):
    with pytest.raises(ConfigError):
        ScenarioConfig(**changes)


def test_replace_revalidates():
    with pytest.raises(ConfigError):
        ScenarioConfig().replace(hop_limit=0)


def test_parse_comments_and_sizes():
    cfg = parse_config("node_count = 7  # small\n\n# nothing\nstatic=yes\nsize_hello=40\n")
    assert cfg.node_count == 7 and cfg.static is True
    assert cfg.sizes.hello == 40 and cfg.sizes.route_query == WireSizes().route_query


@pytest.mark.parametrize("text", ["bogus=1", "node_count", "node_count=abc", "static=maybe", "size_nothing=3"])
def test_parse_errors(text):
    with pytest.raises(ConfigError):
        parse_config(text)


def test_load_roundtrip(tmp_path):
    cfg = ScenarioConfig(node_count=12, pause_time=30.0, sizes=WireSizes(ack=99))
    path = tmp_path / "s.cfg"
    path.write_text(dump_config(cfg))
    assert load_config(path) == cfg


@settings(max_examples=60, deadline=None)
@given(
    nodes=st.integers(2, 500),
    pause=st.floats(0, 1e4, allow_nan=False),
    tx=st.floats(1, 1e3, allow_nan=False),
    seed=st.integers(0, 2**32),
    static=st.booleans(),
)
def test_dump_parse_roundtrip(nodes, pause, tx, seed, static):
    cfg = ScenarioConfig(node_count=nodes, pause_time=pause, tx_range=tx, rng_seed=seed, static=static)
    assert parse_config(dump_config(cfg)) == cfg


def test_config_is_frozen():
    with pytest.raises(dataclasses.FrozenInstanceError):
        ScenarioConfig().node_count = 3
