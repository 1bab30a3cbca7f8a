"""Shared builders and independent oracles for the test suite."""

from __future__ import annotations

import math
from collections import deque

import numpy as np

from jbrsim.config import ScenarioConfig
from jbrsim.jbr import make_jbr_agent, rank
from jbrsim.simcore import Flow, Network


def static_config(n: int, **kw) -> ScenarioConfig:
    base = dict(node_count=n, static=True, flow_count=0, sim_duration=5.0)
    base.update(kw)
    return ScenarioConfig(**base)


def static_network(positions, make_agent=make_jbr_agent, flows=None, **kw) -> Network:
    positions = np.asarray(positions, dtype=float)
    kw.setdefault("field_width", float(positions[:, 0].max()) + 1.0)
    kw.setdefault("field_height", float(positions[:, 1].max()) + 1.0)
    cfg = static_config(len(positions), **kw)
    return Network(cfg, make_agent, positions=positions, flows=flows)


def brute_adjacency(positions, r: float) -> list[set[int]]:
    """O(n^2) distance check, no numpy broadcasting."""
    n = len(positions)
    adj = [set() for _ in range(n)]
    for u in range(n):
        for v in range(u + 1, n):
            if math.dist(positions[u], positions[v]) <= r:
                adj[u].add(v)
                adj[v].add(u)
    return adj


def components(adj: list[set[int]]) -> list[set[int]]:
    seen: set[int] = set()
    comps = []
    for s in range(len(adj)):
        if s in seen:
            continue
        comp = {s}
        todo = deque([s])
        while todo:
            u = todo.popleft()
            for v in adj[u]:
                if v not in comp:
                    comp.add(v)
                    todo.append(v)
        seen |= comp
        comps.append(comp)
    return comps


def brute_election(adj: list[set[int]]) -> tuple[set[int], dict[int, int]]:
    """Apply the election rule with full knowledge of the graph.

    Each node looks at its closed neighbourhood and picks the best by
    (higher degree, lower id).  A node that is its own pick is a janitor; any
    node picked by someone else is also a janitor.  Two nodes of degree one
    linked to each other are janitors of each other.  Isolated nodes do
    nothing.  Returns (janitors, follows) where follows maps each node that
    has a janitor to it.
    """
    deg = [len(a) for a in adj]
    janitors: set[int] = set()
    follows: dict[int, int] = {}
    for v, nbrs in enumerate(adj):
        if not nbrs:
            continue
        if deg[v] == 1:
            (peer,) = nbrs
            if deg[peer] == 1:
                janitors.add(v)
                follows[v] = peer
                continue
        best = min([v, *nbrs], key=lambda u: rank(deg[u], u))
        if best == v:
            janitors.add(v)
        else:
            follows[v] = best
            janitors.add(best)
    return janitors, follows


def distributed_election(net: Network) -> tuple[set[int], dict[int, int]]:
    janitors = {a.id for a in net.agents if a.is_janitor}
    follows = {a.id: a.my_janitor for a in net.agents if a.my_janitor is not None}
    return janitors, follows


def random_positions(rng: np.random.Generator, n: int, side: float) -> np.ndarray:
    return rng.uniform(0.0, side, size=(n, 2))


def one_flow(src: int, dst: int, times) -> list[Flow]:
    return [Flow(0, src, dst, tuple(times))]


# criterion number -> one-line verdict, printed at the end of the session
ACCEPTANCE: dict[int, str] = {}


def verdict(number: int, title: str, ok: bool, detail: str) -> bool:
    line = f"criterion {number} [{'PASS' if ok else 'FAIL'}] {title}: {detail}"
    ACCEPTANCE[number] = line
    print(line)
    return ok
