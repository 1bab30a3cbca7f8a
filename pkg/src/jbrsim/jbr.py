"""Janitor Based Routing: per-node protocol state machine.

Each node elects as janitor the neighbour with the highest degree (lowest id on
ties) after a hello exchange; a node that is its own best choice, or that some
neighbour registers with, takes the janitor role.  Ordinary nodes hand
non-local traffic to their janitor, which forwards directly, source-routes from
its cache, or queries the other janitors.

Handlers are synchronous transitions: they mutate the node and return a list of
``Send`` / ``SetTimer`` / ``CancelTimer`` actions for the engine to apply.
"""

from __future__ import annotations

import enum
import math
from collections import Counter, deque
from dataclasses import dataclass, field
from typing import Callable, Iterable, Optional

from .config import ScenarioConfig
from .messages import (
    Ack,
    Data,
    Hello,
    HelloReply,
    JanitorAliveReply,
    JanitorAliveRequest,
    Kind,
    NewJanitor,
    Route,
    RouteError,
    RouteQuery,
    RouteReply,
    RouteUnreachable,
)
from .simcore import BROADCAST, CancelTimer, InvariantViolation, Packet, Send, SetTimer, Stats

HELLO_EVAL = "hello_eval"
HELLO_TIMEOUT = "hello_timeout"
KEEPALIVE = "keepalive"
IDLE = "idle"
QUERY = "query"
RELAY = "relay"


class Role(enum.Enum):
    ORDINARY = "ordinary"
    JANITOR = "janitor"


def rank(degree: int, node_id: int) -> tuple[int, int]:
    """Sort key for election: higher degree first, then lower id."""
    return (-degree, node_id)


def splice(prefix: Iterable[int], suffix: Iterable[int]) -> Route:
    """Join two node paths and erase any loop, keeping the result a walk of
    adjacent hops whenever both inputs are."""
    prefix, suffix = tuple(prefix), tuple(suffix)
    if prefix and suffix and prefix[-1] == suffix[0]:
        suffix = suffix[1:]
    out: list[int] = []
    where: dict[int, int] = {}
    for node in prefix + suffix:
        if node in where:
            cut = where[node] + 1
            for dropped in out[cut:]:
                del where[dropped]
            del out[cut:]
        else:
            where[node] = len(out)
            out.append(node)
    return tuple(out)


class RouteCache:
    """Destination -> (route starting at the owner, insertion time)."""

    def __init__(self, owner: int):
        self.owner = owner
        self.entries: dict[int, tuple[Route, float]] = {}

    def __len__(self) -> int:
        return len(self.entries)

    def __contains__(self, dest: int) -> bool:
        return dest in self.entries

    def insert(self, dest: int, route: Route, now: float) -> None:
        route = tuple(route)
        if len(route) < 2 or route[0] != self.owner or route[-1] != dest:
            raise ValueError(f"route {route} does not lead from {self.owner} to {dest}")
        if len(set(route)) != len(route):
            raise ValueError(f"route {route} repeats a node")
        self.entries[dest] = (route, now)

    def lookup(self, dest: int, neighbors: set[int]) -> Optional[Route]:
        entry = self.entries.get(dest)
        if entry is None:
            return None
        if entry[0][1] not in neighbors:
            del self.entries[dest]
            return None
        return entry[0]

    def purge_link(self, u: int, v: int) -> int:
        doomed = [d for d, (r, _) in self.entries.items() if _has_link(r, u, v)]
        for d in doomed:
            del self.entries[d]
        return len(doomed)


def _has_link(route: Route, u: int, v: int) -> bool:
    for a, b in zip(route, route[1:]):
        if (a == u and b == v) or (a == v and b == u):
            return True
    return False


@dataclass
class NeighborInfo:
    degree: int = 0
    is_janitor: bool = False
    janitor: Optional[int] = None
    heard_degree: bool = False


@dataclass
class PendingQuery:
    destination: int
    started: float
    packets: list[Packet] = field(default_factory=list)


class JbrNode:
    """Protocol state of one node (``NodeProtocolState``)."""

    def __init__(
        self,
        node_id: int,
        config: ScenarioConfig,
        links: Callable[[], set[int]],
        stats: Stats | None = None,
        audit: Callable[[Route], bool] | None = None,
        check: bool = False,
    ):
        self.id = node_id
        self.config = config
        self.links = links
        self.stats = stats if stats is not None else Stats()
        self.audit = audit
        self.check = check

        self.role = Role.ORDINARY
        self.my_janitor: Optional[int] = None
        self.neighbors: dict[int, NeighborInfo] = {}
        self.cache = RouteCache(node_id)
        self.last_janitor_contact = -math.inf
        self.hello_session_active = False
        self.keepalive_armed = False
        self.awaiting_alive_reply = False
        self.pending: deque[Packet] = deque()
        self.covered: dict[int, float] = {}
        self._idle_contact = False
        self._idle_active = False

        self.seen_queries: set[tuple[int, int, int]] = set()
        self.processed_queries: set[tuple[int, int, int]] = set()
        self.queries: dict[tuple[int, int, int], PendingQuery] = {}
        self.replied: set[tuple[int, int, int]] = set()
        self.query_prev: dict[tuple[int, int, int], int] = {}
        self.held_relays: dict[tuple[int, int, int], tuple[RouteQuery, set[int]]] = {}
        self.query_for: dict[int, tuple[int, int, int]] = {}
        self._qseq = 0

        self.hello_sessions = 0
        self.unreachable_from: Counter[int] = Counter()

    # -- helpers ------------------------------------------------------------

    @property
    def is_janitor(self) -> bool:
        return self.role is Role.JANITOR

    @property
    def degree(self) -> int:
        return len(self.links())

    @property
    def neighbor_degrees(self) -> dict[int, int]:
        return {v: info.degree for v, info in self.neighbors.items() if info.heard_degree}

    def _info(self, node: int) -> NeighborInfo:
        info = self.neighbors.get(node)
        if info is None:
            info = self.neighbors[node] = NeighborInfo()
        return info

    def _learn(self, node: int, degree: int | None = None, is_janitor: bool | None = None, janitor=...) -> None:
        info = self._info(node)
        if degree is not None:
            info.degree = degree
            info.heard_degree = True
        if is_janitor is not None:
            info.is_janitor = is_janitor
        if janitor is not ...:
            info.janitor = janitor

    def _cluster_of(self, node: int) -> Optional[int]:
        info = self.neighbors.get(node)
        if info is None:
            return None
        if info.is_janitor:
            return node
        return info.janitor

    def _contact(self, now: float) -> None:
        self.last_janitor_contact = now

    def _insert_route(self, dest: int, route: Route, now: float) -> None:
        if self.audit is not None and not self.audit(route):
            self.stats.note("cache_unsound")
        self.cache.insert(dest, route, now)

    def _arm_keepalive(self) -> list:
        self.keepalive_armed = True
        return [SetTimer(KEEPALIVE, self.config.timer_alive)]

    def _disarm_keepalive(self) -> list:
        self.keepalive_armed = False
        return [CancelTimer(KEEPALIVE)]

    def _hello(self) -> Hello:
        return Hello(self.id, self.degree, self.is_janitor, self.my_janitor)

    def check_invariants(self) -> None:
        if self.hello_session_active and self.keepalive_armed:
            raise InvariantViolation(f"node {self.id}: hello session and keepalive both active")

    # -- engine entry points ------------------------------------------------

    def start(self, now: float) -> list:
        return self.on_node_up(now)

    def receive(self, now: float, src: int, msg) -> list:
        return self._handlers[msg.kind](self, now, src, msg)

    def on_timer(self, now: float, name) -> list:
        if name == HELLO_EVAL:
            return self.evaluate_janitor(now)
        if name == HELLO_TIMEOUT:
            return self._hello_timeout(now)
        if name == KEEPALIVE:
            return self.keepalive_tick(now)
        if name == IDLE:
            return self.janitor_idle_tick(now)
        if isinstance(name, tuple) and name[0] == QUERY:
            return self._query_timeout(now, name[1])
        if isinstance(name, tuple) and name[0] == RELAY:
            return self._release_relay(now, name[1])
        raise KeyError(name)

    def on_traffic(self, now: float, packet: Packet) -> list:
        return self.send_data(now, packet)

    def on_links(self, now: float, up: set[int], down: set[int]) -> list:
        for v in down:
            self.covered.pop(v, None)
        if not self.is_janitor and self.my_janitor is None and up and not self.hello_session_active:
            return self.on_node_up(now)
        return []

    # -- hello session and election -----------------------------------------

    def on_node_up(self, now: float) -> list:
        """Begin a hello session unless one is already running."""
        if self.hello_session_active:
            self.stats.note("hello_suppressed")
            return []
        self.hello_session_active = True
        self.awaiting_alive_reply = False
        self.hello_sessions += 1
        self.stats.note("hello_session")
        return [
            *self._disarm_keepalive(),
            Send(BROADCAST, self._hello()),
            SetTimer(HELLO_EVAL, self.config.hello_wait),
        ]

    def on_hello(self, now: float, src: int, msg: Hello) -> list:
        self._learn(src, msg.degree, msg.is_janitor, msg.janitor)
        return [Send(src, HelloReply(self.id, self.degree, self.is_janitor, self.my_janitor))]

    def on_hello_reply(self, now: float, src: int, msg: HelloReply) -> list:
        self._learn(src, msg.degree, msg.is_janitor, msg.janitor)
        return []

    def _hello_timeout(self, now: float) -> list:
        # nobody answered the hello: the session lapses until a link comes up
        self.hello_session_active = False
        self.stats.note("hello_timeout")
        return []

    def evaluate_janitor(self, now: float) -> list:
        """Decide between janitor role and following the best neighbour."""
        links = self.links()
        known = {v: self.neighbors[v].degree for v in links if v in self.neighbors and self.neighbors[v].heard_degree}
        if not known:
            if not self.hello_session_active:
                return []
            return [SetTimer(HELLO_TIMEOUT, max(self.config.timer_alive - self.config.hello_wait, 0.0))]
        out: list = []
        if self.hello_session_active:
            self.hello_session_active = False
            out.append(CancelTimer(HELLO_TIMEOUT))
        deg = len(links)
        if deg == 1 and len(known) == 1:
            ((peer, peer_deg),) = known.items()
            if peer_deg == 1:
                # an isolated pair: each is the other's janitor
                out += self._become_janitor(now)
                self.my_janitor = peer
                self._contact(now)
                return out + self._flush(now)
        best = min([(deg, self.id), *((d, v) for v, d in known.items())], key=lambda p: rank(*p))[1]
        if best == self.id:
            out += self._become_janitor(now)
            self.my_janitor = None
        else:
            if self.is_janitor and not self._has_live_members(now, links):
                self.role = Role.ORDINARY
                self.stats.note("janitor_demoted")
                out.append(CancelTimer(IDLE))
            out += self._follow(now, best)
        return out + self._flush(now)

    def _has_live_members(self, now: float, links: set[int]) -> bool:
        horizon = 2 * self.config.timer_alive
        return any(v in links and now - t <= horizon for v, t in self.covered.items())

    def _become_janitor(self, now: float) -> list:
        out = self._disarm_keepalive() if self.keepalive_armed else []
        if self.is_janitor:
            return out
        self.role = Role.JANITOR
        self._idle_contact = True
        self.stats.note("janitor_elected")
        return out + [Send(BROADCAST, NewJanitor(self.id, self.degree)), SetTimer(IDLE, self.config.timer_janitor_idle)]

    def _follow(self, now: float, janitor: int) -> list:
        """Adopt ``janitor`` and register with it (the registration doubles as
        the first keepalive)."""
        self.my_janitor = janitor
        self.awaiting_alive_reply = True
        out = [Send(BROADCAST, JanitorAliveRequest(self.id, janitor, self.is_janitor))]
        if not self.is_janitor:
            out += self._arm_keepalive()
        return out

    def on_new_janitor(self, now: float, src: int, msg: NewJanitor) -> list:
        self._learn(src, msg.degree, True)
        if self.is_janitor or src == self.my_janitor:
            return []
        current = self.my_janitor
        links = self.links()
        if current is not None and current in links:
            cur_info = self.neighbors.get(current)
            cur_rank = rank(cur_info.degree if cur_info else 0, current)
            if rank(msg.degree, src) >= cur_rank:
                return []
        out: list = []
        if self.hello_session_active:
            # the claim ends our hello session
            self.hello_session_active = False
            out += [CancelTimer(HELLO_EVAL), CancelTimer(HELLO_TIMEOUT)]
        self.stats.note("janitor_accepted")
        return out + self._follow(now, src) + self._flush(now)

    # -- keepalive ----------------------------------------------------------

    def on_alive_request(self, now: float, src: int, msg: JanitorAliveRequest) -> list:
        self._learn(src, is_janitor=msg.is_janitor, janitor=msg.janitor)
        if msg.janitor != self.id:
            return []
        self.covered[src] = now
        self._idle_contact = True
        out = self._become_janitor(now) if not self.is_janitor else []
        return out + [Send(src, JanitorAliveReply(self.id))]

    def on_alive_reply(self, now: float, src: int, msg: JanitorAliveReply) -> list:
        # a reply proves the janitor is alive but is not piggybacked traffic,
        # so it does not suppress the next request
        if src == self.my_janitor:
            self.awaiting_alive_reply = False
        return []

    def keepalive_tick(self, now: float) -> list:
        self.keepalive_armed = False
        if self.is_janitor or self.my_janitor is None or self.hello_session_active:
            return []
        if self.awaiting_alive_reply:
            self.stats.note("keepalive_missed")
            return self.on_node_up(now)
        out = self._arm_keepalive()
        if now - self.last_janitor_contact < self.config.timer_alive:
            self.stats.note("keepalive_suppressed")
            return out
        self.awaiting_alive_reply = True
        return out + [Send(BROADCAST, JanitorAliveRequest(self.id, self.my_janitor, False))]

    def janitor_idle_tick(self, now: float) -> list:
        if not self.is_janitor:
            return []
        links = self.links()
        horizon = self.config.timer_janitor_idle
        self.covered = {v: t for v, t in self.covered.items() if v in links and now - t <= horizon}
        busy = self._idle_contact or self._idle_active or bool(self.queries)
        self._idle_contact = self._idle_active = False
        out = [SetTimer(IDLE, self.config.timer_janitor_idle)]
        if not self.covered and not self.queries:
            if self.my_janitor in links:
                # nobody relies on us any more: fall back to plain membership
                self.role = Role.ORDINARY
                self.stats.note("janitor_retired")
                return [CancelTimer(IDLE), *self._arm_keepalive()]
            busy = False
        if busy:
            return out
        self.stats.note("janitor_idle_hello")
        return out + self.on_node_up(now)

    def on_ack(self, now: float, src: int, msg: Ack) -> list:
        if src == self.my_janitor:
            self.awaiting_alive_reply = False
            self._contact(now)
        return []

    # -- data path ------------------------------------------------------------

    def send_data(self, now: float, packet: Packet) -> list:
        links = self.links()
        dest = packet.destination
        if dest == self.id:
            self._deliver(packet)
            return []
        if dest in links:
            if dest == self.my_janitor:
                self._contact(now)
            return [Send(dest, Data(self.id, packet))]
        if self.is_janitor:
            return self.janitor_route(now, packet)
        janitor = self.my_janitor
        if janitor is not None and janitor in links:
            self._contact(now)
            return [Send(janitor, Data(self.id, packet))]
        if janitor is not None:
            self.stats.note("janitor_lost")
            self.my_janitor = None
        out = self._buffer(packet)
        return out + self.on_node_up(now)

    def _buffer(self, packet: Packet) -> list:
        if len(self.pending) >= self.config.pending_cap:
            self.pending.popleft()
            self.stats.note("pending_dropped")
        self.pending.append(packet)
        return []

    def _flush(self, now: float) -> list:
        if not self.pending:
            return []
        packets = list(self.pending)
        self.pending.clear()
        out: list = []
        for p in packets:
            out += self.send_data(now, p)
        return out

    def _deliver(self, packet: Packet) -> None:
        if packet.pid not in self.stats.delivered:
            self.stats.note("data_delivered")
            self.stats.deliver(packet)

    def on_data(self, now: float, src: int, msg: Data) -> list:
        packet = msg.packet
        if src == self.my_janitor:
            self.awaiting_alive_reply = False
            self._contact(now)
        if src in self.covered:
            self.covered[src] = now
            self._idle_contact = True
        if packet.destination == self.id:
            self._deliver(packet)
            return []
        if msg.route is None:
            out = [Send(src, Ack(self.id, packet.flow))] if packet.source == src else []
            return out + self.janitor_route(now, packet)
        return self._forward(now, msg)

    def _forward(self, now: float, msg: Data) -> list:
        route, i = msg.route, msg.index
        nxt = route[i + 1]
        if nxt in self.links():
            if nxt == self.my_janitor:
                self._contact(now)
            self._idle_active = True
            return [Send(nxt, Data(msg.origin, msg.packet, route, i + 1, msg.hops + 1))]
        return self.on_link_break_with_packet(now, msg.packet, route, i)

    def janitor_route(self, now: float, packet: Packet) -> list:
        """Forward ``packet`` on behalf of its source: directly, from the cache,
        or after querying the other janitors."""
        out = self._become_janitor(now) if not self.is_janitor else []
        self._idle_active = True
        links = self.links()
        dest = packet.destination
        if dest in links:
            return out + [Send(dest, Data(self.id, packet))]
        cached = self.cache.lookup(dest, links)
        if cached is not None:
            self.stats.note("cache_hit")
            return out + self._source_route(packet, cached)
        qid = self.query_for.get(dest)
        if qid is not None:
            self.queries[qid].packets.append(packet)
            return out
        if not (links - {packet.source}):
            return out + self._unreachable_to_source(now, packet)
        qid = (self.id, dest, self._qseq)
        self._qseq += 1
        self.queries[qid] = PendingQuery(dest, now, [packet])
        self.query_for[dest] = qid
        self.seen_queries.add(qid)
        self.processed_queries.add(qid)
        self.stats.note("query_started")
        query = RouteQuery(self.id, qid, dest, (self.id,), 1)
        return out + [Send(BROADCAST, query), SetTimer((QUERY, qid), self.config.query_timeout)]

    def _source_route(self, packet: Packet, cached: Route) -> list:
        src = packet.source
        route = cached if src == self.id or src in cached else (src, *cached)
        i = route.index(self.id)
        return [Send(route[i + 1], Data(self.id, packet, route, i + 1, 1))]

    # -- route discovery ------------------------------------------------------
    #
    # Queries carry only the visited-janitor list.  Every node remembers which
    # neighbour it first heard a query from, and replies walk those pointers
    # back to the querying janitor, collecting the route as they go.

    def on_route_query(self, now: float, src: int, msg: RouteQuery) -> list:
        qid = msg.qid
        held = self.held_relays.get(qid)
        if held is not None:
            # another copy overheard while our relay is on hold
            held[1].update(msg.visited)
            self._note_handler(held[1], src)
            self.stats.note("query_duplicate")
            return []
        if qid in self.seen_queries:
            self.stats.note("query_duplicate")
            return []
        self.seen_queries.add(qid)
        self.query_prev[qid] = src
        if self.is_janitor:
            if qid in self.processed_queries:
                self.stats.note("loop_violation")
                if self.check:
                    raise InvariantViolation(f"janitor {self.id} processed query {qid} twice")
            self.processed_queries.add(qid)
            return self._janitor_query(now, msg, self.links())
        if msg.hops >= self.config.hop_limit:
            return []
        heard = set(msg.visited)
        self._note_handler(heard, src)
        if self.config.relay_wait <= 0:
            return self._relay(msg, heard)
        self.held_relays[qid] = (msg, heard)
        return [SetTimer((RELAY, qid), self.config.relay_wait)]

    def _note_handler(self, heard: set[int], src: int) -> None:
        # whoever broadcast the copy reached its own janitor too
        cluster = self._cluster_of(src)
        if cluster is not None:
            heard.add(cluster)

    def _release_relay(self, now: float, qid) -> list:
        held = self.held_relays.pop(qid, None)
        if held is None:
            return []
        return self._relay(*held)

    def _relay(self, msg: RouteQuery, heard: set[int]) -> list:
        """Ordinary nodes pass a query on only when some neighbour belongs to a
        cluster whose janitor has not been heard handling it."""
        if not self._borders_unvisited(self.links(), heard):
            self.stats.note("relay_suppressed")
            return []
        self.stats.note("query_relayed")
        return [Send(BROADCAST, RouteQuery(msg.origin, msg.qid, msg.destination, msg.visited, msg.hops + 1))]

    def _borders_unvisited(self, links: set[int], visited: set[int]) -> bool:
        # neighbours we know nothing about yet are left to nodes that do
        for v in links:
            cluster = self._cluster_of(v)
            if cluster is not None and cluster not in visited:
                return True
        return False

    def _owns(self, dest: int, links: set[int]) -> bool:
        # a neighbouring destination is answered for by its own janitor when
        # that janitor is also within reach of us
        home = self._cluster_of(dest)
        return home is None or home in (self.id, dest) or home not in links

    def _janitor_query(self, now: float, msg: RouteQuery, links: set[int]) -> list:
        dest = msg.destination
        suffix: Optional[Route] = None
        if dest == self.id:
            suffix = (self.id,)
        elif dest in links:
            if self._owns(dest, links):
                suffix = (self.id, dest)
        else:
            entry = self.cache.entries.get(dest)
            if entry is not None and now - entry[1] <= self.config.cache_reply_ttl:
                suffix = self.cache.lookup(dest, links)
        if suffix is not None:
            self.stats.note("query_answered")
            self.replied.add(msg.qid)
            return self._toward_origin(msg.qid, RouteReply(self.id, msg.qid, dest, suffix))
        if msg.hops >= self.config.hop_limit:
            self.stats.note("query_hop_limit")
            return self._toward_origin(msg.qid, RouteUnreachable(self.id, dest, msg.origin, msg.qid))
        return [Send(BROADCAST, RouteQuery(msg.origin, msg.qid, dest, msg.visited + (self.id,), msg.hops + 1))]

    def _toward_origin(self, qid, msg) -> list:
        prev = self.query_prev.get(qid)
        if prev is None or prev not in self.links():
            self.stats.note("reply_lost")
            return []
        if isinstance(msg, RouteReply):
            msg = RouteReply(msg.origin, qid, msg.destination, (prev, *msg.route))
        return [Send(prev, msg)]

    def on_route_reply(self, now: float, src: int, msg: RouteReply) -> list:
        # msg.route starts at this node
        if msg.qid[0] == self.id:
            return self._query_answered(now, msg)
        if msg.qid in self.replied:
            # an earlier answer already went this way and will arrive first
            self.stats.note("reply_merged")
            return []
        self.replied.add(msg.qid)
        route = splice((), msg.route)
        if self.is_janitor and len(route) > 1 and route[0] == self.id:
            self._insert_route(msg.destination, route, now)
        return self._toward_origin(msg.qid, RouteReply(msg.origin, msg.qid, msg.destination, route))

    def _query_answered(self, now: float, msg: RouteReply) -> list:
        query = self.queries.get(msg.qid)
        if query is None:
            self.stats.note("late_reply")
            return []
        route = splice((), msg.route)
        if len(route) < 2 or route[0] != self.id or route[1] not in self.links():
            # stale answer (first hop already gone); wait for another one
            self.stats.note("stale_reply")
            return []
        del self.queries[msg.qid]
        if self.query_for.get(query.destination) == msg.qid:
            del self.query_for[query.destination]
        self.stats.latencies.append(now - query.started)
        self.stats.note("query_succeeded")
        self._insert_route(query.destination, route, now)
        out: list = [CancelTimer((QUERY, msg.qid))]
        for packet in query.packets:
            out += self.janitor_route(now, packet)
        return out

    def _query_timeout(self, now: float, qid) -> list:
        query = self.queries.pop(qid, None)
        if query is None:
            return []
        if self.query_for.get(query.destination) == qid:
            del self.query_for[query.destination]
        self.stats.note("query_failed")
        out: list = []
        told: set[int] = set()
        for packet in query.packets:
            # one notice per source is enough; the rest are dropped with it
            if packet.source in told:
                self.stats.note("packet_unreachable")
                continue
            told.add(packet.source)
            out += self._unreachable_to_source(now, packet)
        return out

    def _unreachable_to_source(self, now: float, packet: Packet) -> list:
        self.stats.note("packet_unreachable")
        source = packet.source
        if source == self.id:
            self.unreachable_from[packet.destination] += 1
            self.stats.note("route_unreachable")
            return []
        if source not in self.links():
            self.stats.note("unreachable_lost")
            return []
        return [Send(source, RouteUnreachable(self.id, packet.destination, self.id))]

    def on_route_unreachable(self, now: float, src: int, msg: RouteUnreachable) -> list:
        if msg.qid is None:
            # our janitor gave up on a packet we sent
            self.unreachable_from[msg.destination] += 1
            self.stats.note("route_unreachable")
            return []
        if msg.qid[0] == self.id:
            # one branch of our own query ran out of hops; the others may still answer
            return []
        return self._toward_origin(msg.qid, msg)

    # -- route maintenance --------------------------------------------------

    def on_link_break_with_packet(self, now: float, packet: Packet, route: Route, i: int) -> list:
        """Next hop ``route[i + 1]`` is gone: bounce the packet to the source."""
        link = (route[i], route[i + 1])
        self.stats.note("route_error")
        self.cache.purge_link(*link)
        # losing our own janitor is what reopens the election here
        out = self.on_node_up(now) if route[i + 1] == self.my_janitor else []
        if i == 0:
            return out + self._recover(now, packet)
        prev = route[i - 1]
        if prev not in self.links():
            self.stats.note("unrecoverable_loss")
            return out
        return out + [Send(prev, RouteError(self.id, link, packet, route[: i + 1], i - 1))]

    def on_route_error(self, now: float, src: int, msg: RouteError) -> list:
        self.cache.purge_link(*msg.link)
        if msg.pos == 0:
            return self._recover(now, msg.packet)
        prev = msg.back[msg.pos - 1]
        if prev not in self.links():
            self.stats.note("unrecoverable_loss")
            return []
        return [Send(prev, RouteError(msg.origin, msg.link, msg.packet, msg.back, msg.pos - 1))]

    def _recover(self, now: float, packet: Packet) -> list:
        packet.salvage += 1
        if packet.salvage > self.config.max_salvage:
            self.stats.note("salvage_exhausted")
            return []
        self.stats.note("route_recovery")
        return self.send_data(now, packet)

    _handlers = {
        Kind.HELLO: on_hello,
        Kind.HELLO_REPLY: on_hello_reply,
        Kind.NEW_JANITOR: on_new_janitor,
        Kind.ALIVE_REQUEST: on_alive_request,
        Kind.ALIVE_REPLY: on_alive_reply,
        Kind.DATA: on_data,
        Kind.ACK: on_ack,
        Kind.ROUTE_QUERY: on_route_query,
        Kind.ROUTE_REPLY: on_route_reply,
        Kind.ROUTE_ERROR: on_route_error,
        Kind.ROUTE_UNREACHABLE: on_route_unreachable,
    }


def make_jbr_agent(node_id: int, network) -> JbrNode:
    audit = network.graph_audit if network.check else None
    return JbrNode(node_id, network.config, network.link_view(node_id), network.stats, audit, network.check)
