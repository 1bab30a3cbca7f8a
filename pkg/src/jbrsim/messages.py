"""Wire messages for JBR and the flooding baseline.

Messages are treated as immutable once sent: a broadcast hands the same object
to every receiver, and forwarding always builds a new message.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass
from typing import ClassVar, Optional

from .config import WireSizes
from .simcore import Packet

Route = tuple[int, ...]


class Kind(enum.Enum):
    HELLO = "Hello"
    HELLO_REPLY = "HelloReply"
    NEW_JANITOR = "NewJanitor"
    ALIVE_REQUEST = "JanitorAliveRequest"
    ALIVE_REPLY = "JanitorAliveReply"
    DATA = "Data"
    ACK = "Ack"
    ROUTE_QUERY = "RouteQuery"
    ROUTE_REPLY = "RouteReply"
    ROUTE_ERROR = "RouteError"
    ROUTE_UNREACHABLE = "RouteUnreachable"
    FLOOD_REQUEST = "FloodRequest"
    FLOOD_REPLY = "FloodReply"
    FLOOD_DATA = "FloodData"
    FLOOD_ERROR = "FloodError"

    @property
    def is_control(self) -> bool:
        return self not in _DATA_PLANE


_DATA_PLANE = {Kind.DATA, Kind.ACK, Kind.FLOOD_DATA}

JBR_KINDS = tuple(k for k in Kind if not k.name.startswith("FLOOD"))
FLOOD_KINDS = tuple(k for k in Kind if k.name.startswith("FLOOD"))


class Message:
    __slots__ = ()
    kind: ClassVar[Kind]
    _size_field: ClassVar[str]
    origin: int

    def list_entries(self) -> int:
        return 0

    def size(self, sizes: WireSizes) -> int:
        return getattr(sizes, self._size_field) + sizes.per_entry * self.list_entries()


# -- JBR ---------------------------------------------------------------------


@dataclass(slots=True)
class Hello(Message):
    kind: ClassVar[Kind] = Kind.HELLO
    _size_field: ClassVar[str] = "hello"
    origin: int
    degree: int
    is_janitor: bool = False
    janitor: Optional[int] = None


@dataclass(slots=True)
class HelloReply(Message):
    kind: ClassVar[Kind] = Kind.HELLO_REPLY
    _size_field: ClassVar[str] = "hello_reply"
    origin: int
    degree: int
    is_janitor: bool = False
    janitor: Optional[int] = None


@dataclass(slots=True)
class NewJanitor(Message):
    kind: ClassVar[Kind] = Kind.NEW_JANITOR
    _size_field: ClassVar[str] = "new_janitor"
    origin: int
    degree: int


@dataclass(slots=True)
class JanitorAliveRequest(Message):
    """Addressed to ``janitor`` but sent on the shared medium, so other
    neighbours learn which janitor the sender belongs to."""

    kind: ClassVar[Kind] = Kind.ALIVE_REQUEST
    _size_field: ClassVar[str] = "alive_request"
    origin: int
    janitor: int
    is_janitor: bool = False


@dataclass(slots=True)
class JanitorAliveReply(Message):
    kind: ClassVar[Kind] = Kind.ALIVE_REPLY
    _size_field: ClassVar[str] = "alive_reply"
    origin: int


@dataclass(slots=True)
class Data(Message):
    """``route`` is ``None`` for a hop handed to a janitor or a direct neighbour;
    otherwise the receiver sits at ``route[index]``."""

    kind: ClassVar[Kind] = Kind.DATA
    _size_field: ClassVar[str] = "data_header"
    origin: int
    packet: Packet
    route: Optional[Route] = None
    index: int = 0
    hops: int = 0

    def list_entries(self) -> int:
        return len(self.route) if self.route else 0

    def size(self, sizes: WireSizes) -> int:
        return Message.size(self, sizes) + self.packet.size


@dataclass(slots=True)
class Ack(Message):
    kind: ClassVar[Kind] = Kind.ACK
    _size_field: ClassVar[str] = "ack"
    origin: int
    flow: int
    janitor_alive: bool = True


@dataclass(slots=True)
class RouteQuery(Message):
    """``visited`` lists the janitors that have already handled the query."""

    kind: ClassVar[Kind] = Kind.ROUTE_QUERY
    _size_field: ClassVar[str] = "route_query"
    origin: int
    qid: tuple[int, int, int]
    destination: int
    visited: Route
    hops: int = 0

    def list_entries(self) -> int:
        return len(self.visited)


@dataclass(slots=True)
class RouteReply(Message):
    """Walks back towards the querying janitor ``qid[0]``; ``route`` runs from
    the current holder to the destination and grows by one node per hop."""

    kind: ClassVar[Kind] = Kind.ROUTE_REPLY
    _size_field: ClassVar[str] = "route_reply"
    origin: int
    qid: tuple[int, int, int]
    destination: int
    route: Route

    def list_entries(self) -> int:
        return len(self.route)


@dataclass(slots=True)
class RouteError(Message):
    """Carries the bounced packet back along ``back`` (packet source first)."""

    kind: ClassVar[Kind] = Kind.ROUTE_ERROR
    _size_field: ClassVar[str] = "route_error"
    origin: int
    link: tuple[int, int]
    packet: Packet
    back: Route
    pos: int

    def list_entries(self) -> int:
        return len(self.back)


@dataclass(slots=True)
class RouteUnreachable(Message):
    """Either a janitor telling a packet source it gave up (``qid`` unset), or a
    hop-limited query branch reporting back to the querying janitor."""

    kind: ClassVar[Kind] = Kind.ROUTE_UNREACHABLE
    _size_field: ClassVar[str] = "route_unreachable"
    origin: int
    destination: int
    janitor: int
    qid: Optional[tuple[int, int, int]] = None


# -- flooding baseline -------------------------------------------------------


@dataclass(slots=True)
class FloodRequest(Message):
    kind: ClassVar[Kind] = Kind.FLOOD_REQUEST
    _size_field: ClassVar[str] = "flood_request"
    origin: int
    rid: tuple[int, int]
    destination: int
    route: Route
    hops: int = 0

    def list_entries(self) -> int:
        return len(self.route)


@dataclass(slots=True)
class FloodReply(Message):
    kind: ClassVar[Kind] = Kind.FLOOD_REPLY
    _size_field: ClassVar[str] = "flood_reply"
    origin: int
    rid: tuple[int, int]
    destination: int
    route: Route
    pos: int

    def list_entries(self) -> int:
        return len(self.route)


@dataclass(slots=True)
class FloodData(Message):
    kind: ClassVar[Kind] = Kind.FLOOD_DATA
    _size_field: ClassVar[str] = "flood_data_header"
    origin: int
    packet: Packet
    route: Route
    index: int

    def list_entries(self) -> int:
        return len(self.route)

    def size(self, sizes: WireSizes) -> int:
        return Message.size(self, sizes) + self.packet.size


@dataclass(slots=True)
class FloodError(Message):
    kind: ClassVar[Kind] = Kind.FLOOD_ERROR
    _size_field: ClassVar[str] = "flood_error"
    origin: int
    link: tuple[int, int]
    packet: Packet
    back: Route
    pos: int

    def list_entries(self) -> int:
        return len(self.back)
