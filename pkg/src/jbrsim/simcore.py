"""Discrete-event engine, random-waypoint mobility and unit-disk radio."""

from __future__ import annotations

import heapq
import math
from collections import Counter, defaultdict
from dataclasses import dataclass, field
from typing import Any, Callable, Iterable, NamedTuple, Protocol, TextIO

import numpy as np

from .config import ScenarioConfig

BROADCAST = -1


class SchedulingError(ValueError):
    pass


class InvariantViolation(AssertionError):
    """A checked simulation invariant failed (only raised in check mode)."""


# ---------------------------------------------------------------------------
# event queue


class Event:
    __slots__ = ("time", "seq", "kind", "callback", "args", "cancelled")

    def __init__(self, time: float, seq: int, kind: str, callback: Callable, args: tuple):
        self.time = time
        self.seq = seq
        self.kind = kind
        self.callback = callback
        self.args = args
        self.cancelled = False

    def __lt__(self, other: "Event") -> bool:
        return (self.time, self.seq) < (other.time, other.seq)

    def __repr__(self) -> str:
        return f"Event({self.time:g}, #{self.seq}, {self.kind})"


class EventQueue:
    """Priority queue ordered by ``(fire_time, sequence)`` with lazy cancellation."""

    def __init__(self) -> None:
        self._heap: list[Event] = []
        self._seq = 0
        self.now = 0.0
        self.processed = 0

    def __len__(self) -> int:
        return sum(1 for ev in self._heap if not ev.cancelled)

    def schedule(self, time: float, kind: str, callback: Callable, *args: Any) -> Event:
        if time < self.now:
            raise SchedulingError(f"cannot schedule at {time} before now={self.now}")
        ev = Event(time, self._seq, kind, callback, args)
        self._seq += 1
        heapq.heappush(self._heap, ev)
        return ev

    @staticmethod
    def cancel(event: Event | None) -> None:
        if event is not None:
            event.cancelled = True

    def pop(self, t_end: float) -> Event | None:
        heap = self._heap
        while heap:
            ev = heap[0]
            if ev.cancelled:
                heapq.heappop(heap)
                continue
            if ev.time > t_end:
                return None
            heapq.heappop(heap)
            self.now = ev.time
            return ev
        return None

    def run_until(self, t_end: float, on_event: Callable[[Event], None] | None = None) -> int:
        """Fire every event with ``fire_time <= t_end``; the clock ends at ``t_end``."""
        count = 0
        while True:
            ev = self.pop(t_end)
            if ev is None:
                break
            if on_event is not None:
                on_event(ev)
            ev.callback(*ev.args)
            count += 1
        self.processed += count
        if t_end > self.now:
            self.now = t_end
        return count


# ---------------------------------------------------------------------------
# mobility


@dataclass
class NodeKinematics:
    """Motion state: the node sits at ``position`` at time ``stamp`` and heads for
    ``waypoint`` at ``speed`` once ``paused_until`` has passed."""

    node_id: int
    position: tuple[float, float]
    waypoint: tuple[float, float]
    speed: float
    paused_until: float
    stamp: float = 0.0

    @property
    def departure(self) -> float:
        return max(self.stamp, self.paused_until)

    @property
    def arrival(self) -> float:
        dist = math.dist(self.position, self.waypoint)
        if dist == 0.0:
            return self.departure
        if self.speed <= 0.0:
            return math.inf
        return self.departure + dist / self.speed

    def position_at(self, t: float) -> tuple[float, float]:
        start = self.departure
        if t <= start:
            return self.position
        end = self.arrival
        if t >= end:
            return self.waypoint
        frac = (t - start) / (end - start)
        (x0, y0), (x1, y1) = self.position, self.waypoint
        return (x0 + (x1 - x0) * frac, y0 + (y1 - y0) * frac)


def uniform_point(config: ScenarioConfig, rng: np.random.Generator) -> tuple[float, float]:
    return (float(rng.uniform(0.0, config.field_width)), float(rng.uniform(0.0, config.field_height)))


def advance_waypoint(
    node: NodeKinematics, config: ScenarioConfig, rng: np.random.Generator, now: float | None = None
) -> NodeKinematics:
    """Start a new random-waypoint leg from the node's current (paused) position."""
    now = node.paused_until if now is None else now
    waypoint = uniform_point(config, rng)
    speed = float(rng.uniform(config.speed_min, config.speed_max))
    if speed <= 0.0:
        speed = config.speed_max
    return NodeKinematics(node.node_id, node.position, waypoint, speed, node.paused_until, stamp=now)


def arrive(node: NodeKinematics, config: ScenarioConfig) -> NodeKinematics:
    """Node reaches its waypoint and pauses there for ``pause_time``."""
    t = node.arrival
    return NodeKinematics(node.node_id, node.waypoint, node.waypoint, node.speed, t + config.pause_time, stamp=t)


class RandomWaypoint:
    """Random-waypoint motion for all nodes; legs start at t=0 and each arrival
    is followed by a pause of ``pause_time``."""

    def __init__(self, config: ScenarioConfig, rng: np.random.Generator):
        self.config = config
        self.rng = rng
        self.nodes = []
        for i in range(config.node_count):
            start = uniform_point(config, rng)
            idle = NodeKinematics(i, start, start, 0.0, 0.0, 0.0)
            self.nodes.append(idle if config.static else advance_waypoint(idle, config, rng, 0.0))

    def positions(self, t: float) -> np.ndarray:
        return np.array([n.position_at(t) for n in self.nodes], dtype=float)

    def on_arrival(self, node_id: int) -> NodeKinematics:
        self.nodes[node_id] = arrive(self.nodes[node_id], self.config)
        return self.nodes[node_id]

    def on_departure(self, node_id: int, now: float) -> NodeKinematics:
        self.nodes[node_id] = advance_waypoint(self.nodes[node_id], self.config, self.rng, now)
        return self.nodes[node_id]


# ---------------------------------------------------------------------------
# connectivity


def unit_disk(positions: np.ndarray, tx_range: float) -> np.ndarray:
    """Boolean adjacency; distance exactly ``tx_range`` counts as connected."""
    diff = positions[:, None, :] - positions[None, :, :]
    dist = np.hypot(diff[..., 0], diff[..., 1])
    adj = dist <= tx_range
    np.fill_diagonal(adj, False)
    return adj


@dataclass
class ConnectivityGraph:
    adjacency: list[set[int]]
    epoch: int = 0
    matrix: np.ndarray | None = field(default=None, repr=False)

    @classmethod
    def from_positions(cls, positions: np.ndarray, tx_range: float) -> "ConnectivityGraph":
        mat = unit_disk(positions, tx_range)
        return cls(_sets_from_matrix(mat), 0, mat)

    def degree(self, node: int) -> int:
        return len(self.adjacency[node])

    def degrees(self) -> list[int]:
        return [len(a) for a in self.adjacency]

    def edges(self) -> set[tuple[int, int]]:
        return {(u, v) for u, nbrs in enumerate(self.adjacency) for v in nbrs if u < v}

    def is_path(self, route: Iterable[int]) -> bool:
        route = list(route)
        return all(b in self.adjacency[a] for a, b in zip(route, route[1:]))


def _sets_from_matrix(mat: np.ndarray) -> list[set[int]]:
    return [set(np.flatnonzero(row).tolist()) for row in mat]


def recompute_graph(
    graph: ConnectivityGraph, positions: np.ndarray, tx_range: float
) -> tuple[ConnectivityGraph, list[tuple[int, int]], list[tuple[int, int]]]:
    """Rebuild the unit-disk graph and report ``(graph, links_up, links_down)``."""
    mat = unit_disk(positions, tx_range)
    old = graph.matrix if graph.matrix is not None else _matrix_from_sets(graph.adjacency)
    changed = mat != old
    if not changed.any():
        return graph, [], []
    upper = np.triu(changed, 1)
    up = [(int(u), int(v)) for u, v in zip(*np.nonzero(upper & mat))]
    down = [(int(u), int(v)) for u, v in zip(*np.nonzero(upper & old))]
    return ConnectivityGraph(_sets_from_matrix(mat), graph.epoch + 1, mat), up, down


def _matrix_from_sets(adjacency: list[set[int]]) -> np.ndarray:
    n = len(adjacency)
    mat = np.zeros((n, n), dtype=bool)
    for u, nbrs in enumerate(adjacency):
        for v in nbrs:
            mat[u, v] = True
    return mat


def degree_excluding(graph: ConnectivityGraph, x: int, m: int) -> int:
    """Number of neighbours of ``x`` other than ``m``."""
    return len(graph.adjacency[x] - {m})


# ---------------------------------------------------------------------------
# traffic


@dataclass
class Packet:
    pid: int
    flow: int
    source: int
    destination: int
    size: int
    created: float
    salvage: int = 0


@dataclass(frozen=True)
class Flow:
    flow_id: int
    source: int
    destination: int
    arrivals: tuple[float, ...]


def generate_flows(config: ScenarioConfig, rng: np.random.Generator) -> list[Flow]:
    """Constant-destination flows with exponential inter-arrival times."""
    flows = []
    for f in range(config.flow_count):
        src, dst = (int(x) for x in rng.choice(config.node_count, size=2, replace=False))
        times = []
        if config.traffic_rate > 0:
            t = float(rng.exponential(1.0 / config.traffic_rate))
            while t <= config.sim_duration:
                times.append(t)
                t += float(rng.exponential(1.0 / config.traffic_rate))
        flows.append(Flow(f, src, dst, tuple(times)))
    return flows


# ---------------------------------------------------------------------------
# protocol plumbing


class Send(NamedTuple):
    dst: int  # BROADCAST for a local broadcast
    msg: Any


class SetTimer(NamedTuple):
    name: Any
    delay: float


class CancelTimer(NamedTuple):
    name: Any


class Agent(Protocol):
    def start(self, now: float) -> list: ...
    def receive(self, now: float, src: int, msg: Any) -> list: ...
    def on_timer(self, now: float, name: Any) -> list: ...
    def on_traffic(self, now: float, packet: Packet) -> list: ...
    def on_links(self, now: float, up: set[int], down: set[int]) -> list: ...


class Stats:
    """Run-wide tallies shared by the engine and every protocol agent."""

    def __init__(self) -> None:
        self.tx_count: Counter[str] = Counter()
        self.tx_bytes: Counter[str] = Counter()
        self.control_kinds: set[str] = set()
        self.link_losses = 0
        self.events: Counter[str] = Counter()
        self.delivered: set[int] = set()
        self.generated = 0
        self.latencies: list[float] = []

    def tally(self, msg: Any, size: int) -> None:
        kind = msg.kind.value
        self.tx_count[kind] += 1
        self.tx_bytes[kind] += size
        if msg.kind.is_control:
            self.control_kinds.add(kind)

    def note(self, name: str, amount: int = 1) -> None:
        self.events[name] += amount

    def deliver(self, packet: Packet) -> None:
        self.delivered.add(packet.pid)

    @property
    def control_packets(self) -> int:
        return sum(self.tx_count[k] for k in self.control_kinds)

    @property
    def control_bytes(self) -> int:
        return sum(self.tx_bytes[k] for k in self.control_kinds)


class Network:
    """One simulation run: owns time, randomness, positions and the graph.

    ``make_agent(node_id, network)`` builds the per-node protocol object.
    """

    def __init__(
        self,
        config: ScenarioConfig,
        make_agent: Callable[[int, "Network"], Agent],
        *,
        trace: TextIO | None = None,
        check: bool = False,
        positions: np.ndarray | None = None,
        flows: list[Flow] | None = None,
    ):
        self.config = config
        self.check = check
        self.trace = trace
        self.queue = EventQueue()
        self.stats = Stats()
        seeds = np.random.SeedSequence(config.rng_seed).spawn(3)
        self.mobility_rng, self.traffic_rng, self.protocol_rng = (np.random.default_rng(s) for s in seeds)
        self.mobility = RandomWaypoint(config, self.mobility_rng)
        if positions is not None:
            positions = np.asarray(positions, dtype=float)
            if positions.shape != (config.node_count, 2):
                raise ValueError("positions must have shape (node_count, 2)")
            for i, (x, y) in enumerate(positions):
                self.mobility.nodes[i] = NodeKinematics(i, (float(x), float(y)), (float(x), float(y)), 0.0, 0.0)
        self.flows = generate_flows(config, self.traffic_rng) if flows is None else flows
        self.graph = ConnectivityGraph.from_positions(self.mobility.positions(0.0), config.tx_range)
        self.agents = [make_agent(i, self) for i in range(config.node_count)]
        self._timers: list[dict[Any, Event]] = [{} for _ in range(config.node_count)]
        self._pid = 0
        self._started = False

    # -- time & scheduling --------------------------------------------------

    @property
    def now(self) -> float:
        return self.queue.now

    def schedule(self, time: float, kind: str, callback: Callable, *args: Any) -> Event:
        return self.queue.schedule(time, kind, callback, *args)

    def neighbors(self, node: int) -> set[int]:
        return self.graph.adjacency[node]

    def link_view(self, node: int) -> Callable[[], set[int]]:
        return lambda: self.graph.adjacency[node]

    def graph_audit(self, route: Iterable[int]) -> bool:
        return self.graph.is_path(route)

    # -- radio --------------------------------------------------------------

    def deliver(self, src: int, dst: int, msg: Any) -> int:
        """Transmit once; returns the number of receivers scheduled."""
        self.stats.tally(msg, msg.size(self.config.sizes))
        at = self.now + self.config.hop_latency
        nbrs = self.graph.adjacency[src]
        if dst == BROADCAST:
            for v in sorted(nbrs):
                self.queue.schedule(at, "MessageDelivery", self._receive, src, v, msg)
            return len(nbrs)
        if dst in nbrs:
            self.queue.schedule(at, "MessageDelivery", self._receive, src, dst, msg)
            return 1
        self.stats.link_losses += 1
        return 0

    def _receive(self, src: int, dst: int, msg: Any) -> None:
        self.apply(dst, self.agents[dst].receive(self.now, src, msg))

    def apply(self, node: int, actions: Iterable) -> None:
        timers = self._timers[node]
        for action in actions:
            if isinstance(action, Send):
                self.deliver(node, action.dst, action.msg)
            elif isinstance(action, SetTimer):
                EventQueue.cancel(timers.get(action.name))
                timers[action.name] = self.queue.schedule(
                    self.now + action.delay, "TimerFire", self._fire, node, action.name
                )
            elif isinstance(action, CancelTimer):
                EventQueue.cancel(timers.pop(action.name, None))
            else:
                raise TypeError(f"unknown action {action!r}")
        if self.check:
            checker = getattr(self.agents[node], "check_invariants", None)
            if checker is not None:
                checker()

    def timer_armed(self, node: int, name: Any) -> bool:
        ev = self._timers[node].get(name)
        return ev is not None and not ev.cancelled

    def _fire(self, node: int, name: Any) -> None:
        self._timers[node].pop(name, None)
        self.apply(node, self.agents[node].on_timer(self.now, name))

    # -- mobility -----------------------------------------------------------

    def _tick(self) -> None:
        self._refresh_graph()
        nxt = self.now + self.config.graph_tick
        if nxt <= self.config.sim_duration:
            self.queue.schedule(nxt, "MobilityUpdate", self._tick)

    def _arrival(self, node_id: int) -> None:
        kin = self.mobility.on_arrival(node_id)
        self._refresh_graph()
        self.queue.schedule(kin.paused_until, "MobilityUpdate", self._departure, node_id)

    def _departure(self, node_id: int) -> None:
        kin = self.mobility.on_departure(node_id, self.now)
        self._schedule_arrival(kin)

    def _schedule_arrival(self, kin: NodeKinematics) -> None:
        if math.isfinite(kin.arrival):
            self.queue.schedule(max(kin.arrival, self.now), "MobilityUpdate", self._arrival, kin.node_id)

    def _refresh_graph(self) -> None:
        positions = self.mobility.positions(self.now)
        self.graph, up, down = recompute_graph(self.graph, positions, self.config.tx_range)
        if self.check:
            self._check_graph(positions)
        if not (up or down):
            return
        ups: dict[int, set[int]] = defaultdict(set)
        downs: dict[int, set[int]] = defaultdict(set)
        for u, v in up:
            ups[u].add(v)
            ups[v].add(u)
        for u, v in down:
            downs[u].add(v)
            downs[v].add(u)
        for node in sorted(set(ups) | set(downs)):
            self.apply(node, self.agents[node].on_links(self.now, ups.get(node, set()), downs.get(node, set())))

    def _check_graph(self, positions: np.ndarray) -> None:
        r = self.config.tx_range
        n = len(positions)
        for u in range(n):
            for v in range(u + 1, n):
                linked = math.dist(positions[u], positions[v]) <= r
                if linked != (v in self.graph.adjacency[u]) or linked != (u in self.graph.adjacency[v]):
                    raise InvariantViolation(f"edge ({u},{v}) disagrees with distance check")
        for kin in self.mobility.nodes:
            x, y = kin.position_at(self.now)
            if not (0 <= x <= self.config.field_width and 0 <= y <= self.config.field_height):
                raise InvariantViolation(f"node {kin.node_id} left the field")

    # -- traffic ------------------------------------------------------------

    def _traffic(self, flow: Flow) -> None:
        self.stats.generated += 1
        packet = Packet(self._pid, flow.flow_id, flow.source, flow.destination, self.config.payload_bytes, self.now)
        self._pid += 1
        self.apply(flow.source, self.agents[flow.source].on_traffic(self.now, packet))

    # -- driver -------------------------------------------------------------

    def start(self) -> None:
        if self._started:
            return
        self._started = True
        if not self.config.static:
            self.queue.schedule(self.config.graph_tick, "MobilityUpdate", self._tick)
            for kin in self.mobility.nodes:
                self._schedule_arrival(kin)
        # arrivals are merged across flows so the event sequence is independent of flow order
        arrivals = sorted((t, f.flow_id) for f in self.flows for t in f.arrivals)
        for t, fid in arrivals:
            self.queue.schedule(t, "TrafficArrival", self._traffic, self.flows[fid])
        for i, agent in enumerate(self.agents):
            self.apply(i, agent.start(self.now))

    def run_until(self, t_end: float) -> Stats:
        self.start()
        self.queue.run_until(t_end, self._trace_event if self.trace is not None else None)
        return self.stats

    def _trace_event(self, ev: Event) -> None:
        self.trace.write(f"{ev.time:.6f}\t{ev.kind}\t{_describe(ev)}\n")


def _describe(ev: Event) -> str:
    if ev.kind == "MessageDelivery":
        src, dst, msg = ev.args
        return f"{src}->{dst} {msg.kind.value}"
    if ev.kind == "TimerFire":
        node, name = ev.args
        return f"node={node} timer={name}"
    if ev.kind == "TrafficArrival":
        (flow,) = ev.args
        return f"flow={flow.flow_id} {flow.source}->{flow.destination}"
    if ev.args:
        return f"node={ev.args[0]}"
    return "tick"
