"""Flooding on-demand routing: the overhead comparator for JBR.

A source without a usable route broadcasts a request that every node
rebroadcasts once with itself appended; the destination answers along the
reverse of the accumulated route and the source then source-routes its data.
"""

from __future__ import annotations

from typing import Callable, Optional

from .config import ScenarioConfig
from .messages import FloodData, FloodError, FloodReply, FloodRequest, Kind, Route
from .simcore import BROADCAST, Packet, Send, SetTimer, Stats

DISCOVERY = "discovery"


class FloodNode:
    def __init__(
        self,
        node_id: int,
        config: ScenarioConfig,
        links: Callable[[], set[int]],
        stats: Stats | None = None,
    ):
        self.id = node_id
        self.config = config
        self.links = links
        self.stats = stats if stats is not None else Stats()
        self.cache: dict[int, Route] = {}
        self.seen: set[tuple[int, int]] = set()
        self.pending: dict[int, list[Packet]] = {}
        # destination -> (current request id, attempts so far, first attempt time)
        self.discovering: dict[int, tuple[tuple[int, int], int, float]] = {}
        self._rseq = 0
        self.failed_discoveries = 0

    # -- engine entry points ------------------------------------------------

    def start(self, now: float) -> list:
        return []

    def receive(self, now: float, src: int, msg) -> list:
        return self._handlers[msg.kind](self, now, src, msg)

    def on_timer(self, now: float, name) -> list:
        kind, dest = name
        if kind != DISCOVERY:
            raise KeyError(name)
        return self._discovery_timeout(now, dest)

    def on_traffic(self, now: float, packet: Packet) -> list:
        return self.send(now, packet)

    def on_links(self, now: float, up: set[int], down: set[int]) -> list:
        return []

    # -- source side ----------------------------------------------------------

    def send(self, now: float, packet: Packet) -> list:
        dest = packet.destination
        if dest == self.id:
            self._deliver(packet)
            return []
        route = self.cache.get(dest)
        if route is not None:
            if route[1] in self.links():
                return [Send(route[1], FloodData(self.id, packet, route, 1))]
            del self.cache[dest]
        self.pending.setdefault(dest, []).append(packet)
        if len(self.pending[dest]) > self.config.pending_cap:
            self.pending[dest].pop(0)
            self.stats.note("pending_dropped")
        if dest in self.discovering:
            return []
        return self.flood_discover(now, dest)

    def flood_discover(self, now: float, dest: int, attempt: int = 0, started: Optional[float] = None) -> list:
        rid = (self.id, self._rseq)
        self._rseq += 1
        self.seen.add(rid)
        self.discovering[dest] = (rid, attempt, now if started is None else started)
        self.stats.note("flood_started")
        return [
            Send(BROADCAST, FloodRequest(self.id, rid, dest, (self.id,), 1)),
            SetTimer((DISCOVERY, dest), self.config.request_timeout),
        ]

    def _discovery_timeout(self, now: float, dest: int) -> list:
        state = self.discovering.get(dest)
        if state is None:
            return []
        _, attempt, started = state
        if attempt < self.config.request_retries:
            return self.flood_discover(now, dest, attempt + 1, started)
        del self.discovering[dest]
        dropped = self.pending.pop(dest, [])
        self.failed_discoveries += 1
        self.stats.note("route_unreachable")
        self.stats.note("discovery_failed")
        self.stats.note("packet_unreachable", len(dropped))
        return []

    # -- relays ---------------------------------------------------------------

    def on_request(self, now: float, src: int, msg: FloodRequest) -> list:
        if msg.rid in self.seen:
            return []
        self.seen.add(msg.rid)
        route = msg.route + (self.id,)
        out = []
        if msg.destination == self.id:
            out.append(Send(src, FloodReply(self.id, msg.rid, self.id, route, len(route) - 2)))
        # every node, the destination included, rebroadcasts a request once
        if msg.hops < self.config.hop_limit:
            out.append(Send(BROADCAST, FloodRequest(msg.origin, msg.rid, msg.destination, route, msg.hops + 1)))
        return out

    def on_reply(self, now: float, src: int, msg: FloodReply) -> list:
        if msg.pos == 0:
            return self._route_found(now, msg)
        prev = msg.route[msg.pos - 1]
        if prev not in self.links():
            self.stats.note("reply_lost")
            return []
        return [Send(prev, FloodReply(msg.origin, msg.rid, msg.destination, msg.route, msg.pos - 1))]

    def _route_found(self, now: float, msg: FloodReply) -> list:
        dest = msg.destination
        state = self.discovering.get(dest)
        if state is None:
            self.stats.note("late_reply")
            return []
        del self.discovering[dest]
        self.stats.latencies.append(now - state[2])
        self.cache[dest] = msg.route
        out: list = []
        for packet in self.pending.pop(dest, []):
            out += self.send(now, packet)
        return out

    def on_data(self, now: float, src: int, msg: FloodData) -> list:
        route, i = msg.route, msg.index
        if route[i] == msg.packet.destination:
            self._deliver(msg.packet)
            return []
        nxt = route[i + 1]
        if nxt in self.links():
            return [Send(nxt, FloodData(msg.origin, msg.packet, route, i + 1))]
        return self.flood_on_break(now, msg.packet, route, i)

    def flood_on_break(self, now: float, packet: Packet, route: Route, i: int) -> list:
        link = (route[i], route[i + 1])
        self.stats.note("route_error")
        if i == 0:
            self.cache.pop(packet.destination, None)
            return self._recover(now, packet)
        prev = route[i - 1]
        if prev not in self.links():
            self.stats.note("unrecoverable_loss")
            return []
        return [Send(prev, FloodError(self.id, link, packet, route[: i + 1], i - 1))]

    def on_error(self, now: float, src: int, msg: FloodError) -> list:
        if msg.pos == 0:
            dest = msg.packet.destination
            cached = self.cache.get(dest)
            if cached is not None and _uses(cached, msg.link):
                del self.cache[dest]
            return self._recover(now, msg.packet)
        prev = msg.back[msg.pos - 1]
        if prev not in self.links():
            self.stats.note("unrecoverable_loss")
            return []
        return [Send(prev, FloodError(msg.origin, msg.link, msg.packet, msg.back, msg.pos - 1))]

    def _recover(self, now: float, packet: Packet) -> list:
        packet.salvage += 1
        if packet.salvage > self.config.max_salvage:
            self.stats.note("salvage_exhausted")
            return []
        self.stats.note("route_recovery")
        return self.send(now, packet)

    def _deliver(self, packet: Packet) -> None:
        if packet.pid not in self.stats.delivered:
            self.stats.note("data_delivered")
            self.stats.deliver(packet)

    _handlers = {
        Kind.FLOOD_REQUEST: on_request,
        Kind.FLOOD_REPLY: on_reply,
        Kind.FLOOD_DATA: on_data,
        Kind.FLOOD_ERROR: on_error,
    }


def _uses(route: Route, link: tuple[int, int]) -> bool:
    u, v = link
    return any((a, b) in ((u, v), (v, u)) for a, b in zip(route, route[1:]))


def make_flood_agent(node_id: int, network) -> FloodNode:
    return FloodNode(node_id, network.config, network.link_view(node_id), network.stats)
