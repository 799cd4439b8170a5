"""Compact block-diagram model representation.

A model is a set of named block instances plus port-to-port connections.
Ports are written ``"Block/Port"`` where the port token is ``LConnN`` /
``RConnN`` for conserving ports, a bare integer for signal ports, and any
other token (``"-"``, ``"T_meas"``) for a named alias resolved through the
block catalog. Several ports may be written at once as ``"Block/(LConn1,LConn2)"``;
such connections are expanded index-wise by :func:`canonicalize`.

All values are immutable once built; every operation returns a new model.
"""
from __future__ import annotations

import math
import re
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Optional, Union

from .errors import ExpandError, MergeConflict, ParseError

SUBSYSTEM = "Subsystem"

_LCONN = re.compile(r"LConn(\d+)")
_RCONN = re.compile(r"RConn(\d+)")
_DIGITS = re.compile(r"\d+")


@dataclass(frozen=True)
class SignalPort:
    index: int

    def __post_init__(self):
        _check_index(self.index)


@dataclass(frozen=True)
class ConservingLeft:
    index: int

    def __post_init__(self):
        _check_index(self.index)


@dataclass(frozen=True)
class ConservingRight:
    index: int

    def __post_init__(self):
        _check_index(self.index)


@dataclass(frozen=True)
class NamedAlias:
    name: str

    def __post_init__(self):
        n = self.name
        if not isinstance(n, str) or not n or n != n.strip():
            raise ValueError(f"invalid port alias {n!r}")
        if "/" in n or "," in n or n.startswith("("):
            raise ValueError(f"invalid port alias {n!r}")
        if _LCONN.fullmatch(n) or _RCONN.fullmatch(n) or _DIGITS.fullmatch(n):
            raise ValueError(f"alias {n!r} collides with an indexed port token")


PortId = Union[SignalPort, ConservingLeft, ConservingRight, NamedAlias]
CONSERVING_KINDS = (ConservingLeft, ConservingRight)


def _check_index(index):
    if isinstance(index, bool) or not isinstance(index, int) or index < 1:
        raise ValueError(f"port index must be an integer >= 1, got {index!r}")


@dataclass(frozen=True)
class PortRef:
    block: str
    port: PortId

    def __str__(self):
        return render_port_ref(self)


@dataclass(frozen=True)
class MultiPortRef:
    """Several ports of one block, written ``Block/(p1,p2,...)``."""

    block: str
    ports: tuple

    def __str__(self):
        return render_port_ref(self)


Endpoint = Union[PortRef, MultiPortRef]


@dataclass(frozen=True)
class Connection:
    src: Endpoint
    dst: Endpoint

    @property
    def is_multi(self) -> bool:
        return isinstance(self.src, MultiPortRef) or isinstance(self.dst, MultiPortRef)

    def sort_key(self):
        return (render_port_ref(self.src), render_port_ref(self.dst))


@dataclass(frozen=True)
class Quantity:
    """A number carrying a unit string, e.g. ``Quantity(300, "K")``."""

    value: float
    unit: str

    def __post_init__(self):
        if not _is_number(self.value) or not math.isfinite(self.value):
            raise ValueError(f"quantity value must be a finite number, got {self.value!r}")
        if not isinstance(self.unit, str):
            raise ValueError("quantity unit must be a string")


ParamValue = Union[int, float, str, bool, tuple, Quantity]


def _is_number(x) -> bool:
    return isinstance(x, (int, float)) and not isinstance(x, bool)


def normalize_param(value):
    """Check a parameter value and return its immutable form (lists become tuples)."""
    if isinstance(value, (bool, str, Quantity)):
        return value
    if _is_number(value):
        if not math.isfinite(value):
            raise ValueError(f"parameter values must be finite, got {value!r}")
        return value
    if isinstance(value, (list, tuple)):
        items = tuple(value)
        for x in items:
            if not _is_number(x) or not math.isfinite(x):
                raise ValueError(f"list parameters must hold finite numbers, got {x!r}")
        return items
    raise ValueError(f"unsupported parameter value {value!r}")


@dataclass(frozen=True)
class BlockInstance:
    type_name: str
    params: Mapping[str, ParamValue] = field(default_factory=dict)
    inner: Optional["SystemModel"] = None
    summary: Optional[str] = None

    def __post_init__(self):
        if not isinstance(self.type_name, str) or not self.type_name:
            raise ValueError("block type_name must be a non-empty string")
        if self.inner is not None and self.type_name != SUBSYSTEM:
            raise ValueError(f"only {SUBSYSTEM!r} blocks may hold an inner model")
        params = {}
        for k, v in dict(self.params).items():
            if not isinstance(k, str) or not k:
                raise ValueError(f"invalid parameter name {k!r}")
            params[k] = normalize_param(v)
        object.__setattr__(self, "params", params)


@dataclass(frozen=True)
class SystemModel:
    blocks: Mapping[str, BlockInstance] = field(default_factory=dict)
    connections: tuple = ()

    def __post_init__(self):
        blocks = dict(self.blocks)
        for name, blk in blocks.items():
            check_block_name(name)
            if not isinstance(blk, BlockInstance):
                raise TypeError(f"block {name!r} is not a BlockInstance")
        object.__setattr__(self, "blocks", blocks)
        conns = tuple(self.connections)
        for c in conns:
            if not isinstance(c, Connection):
                raise TypeError(f"{c!r} is not a Connection")
        object.__setattr__(self, "connections", conns)

    def __len__(self):
        return len(self.blocks)

    def block_count(self, recursive=True) -> int:
        n = 0
        for blk in self.blocks.values():
            if recursive and blk.inner is not None:
                n += blk.inner.block_count()
            else:
                n += 1
        return n

    def replace(self, blocks=None, connections=None) -> "SystemModel":
        return SystemModel(
            self.blocks if blocks is None else blocks,
            self.connections if connections is None else connections,
        )


def check_block_name(name):
    if not isinstance(name, str) or not name.strip():
        raise ValueError(f"block names must be non-empty strings, got {name!r}")
    if "/" in name:
        raise ValueError(f"block name {name!r} contains '/'")


# -- port references ---------------------------------------------------------

def parse_port_id(token: str) -> PortId:
    token = token.strip()
    if not token:
        raise ParseError("empty port token")
    for pattern, kind in ((_LCONN, ConservingLeft), (_RCONN, ConservingRight), (_DIGITS, SignalPort)):
        m = pattern.fullmatch(token)
        if m:
            index = int(m.group(1) if m.groups() else m.group(0))
            if index < 1:
                raise ParseError(f"port index must be >= 1 in {token!r}")
            return kind(index)
    try:
        return NamedAlias(token)
    except ValueError as exc:
        raise ParseError(str(exc)) from None


def render_port_id(port: PortId) -> str:
    if isinstance(port, SignalPort):
        return str(port.index)
    if isinstance(port, ConservingLeft):
        return f"LConn{port.index}"
    if isinstance(port, ConservingRight):
        return f"RConn{port.index}"
    if isinstance(port, NamedAlias):
        return port.name
    raise TypeError(f"not a port id: {port!r}")


def _split(text: str, known_blocks):
    if text.count("/") == 1:
        block, token = text.split("/")
        return block, token
    if known_blocks:
        # longest known name wins
        for name in sorted(known_blocks, key=len, reverse=True):
            if text.startswith(name + "/") and "/" not in text[len(name) + 1:]:
                return name, text[len(name) + 1:]
    if "/" not in text:
        raise ParseError(f"port reference {text!r} has no '/' separator")
    raise ParseError(f"ambiguous port reference {text!r}: more than one '/'")


def parse_endpoint(text: str, known_blocks: Optional[Iterable[str]] = None) -> Endpoint:
    """Parse ``"Block/Port"`` or the multi-port form ``"Block/(p1,p2)"``."""
    if not isinstance(text, str):
        raise ParseError(f"port reference must be a string, got {text!r}")
    block, token = _split(text, known_blocks)
    if not block.strip():
        raise ParseError(f"empty block name in {text!r}")
    token = token.strip()
    if token.startswith("("):
        if not token.endswith(")"):
            raise ParseError(f"unterminated port list in {text!r}")
        parts = [p for p in token[1:-1].split(",")]
        if any(not p.strip() for p in parts):
            raise ParseError(f"empty entry in port list {text!r}")
        return MultiPortRef(block, tuple(parse_port_id(p) for p in parts))
    return PortRef(block, parse_port_id(token))


def parse_port_ref(text: str, known_blocks: Optional[Iterable[str]] = None) -> PortRef:
    ref = parse_endpoint(text, known_blocks)
    if isinstance(ref, MultiPortRef):
        raise ParseError(f"expected a single port, got a port list in {text!r}")
    return ref


def render_port_ref(ref: Endpoint) -> str:
    if isinstance(ref, MultiPortRef):
        inner = ",".join(render_port_id(p) for p in ref.ports)
        return f"{ref.block}/({inner})"
    return f"{ref.block}/{render_port_id(ref.port)}"


def is_conserving(port: PortId) -> bool:
    return isinstance(port, CONSERVING_KINDS)


# -- structural operations ---------------------------------------------------

def expand_connection(conn: Connection) -> list:
    src, dst = conn.src, conn.dst
    multi_src = isinstance(src, MultiPortRef)
    multi_dst = isinstance(dst, MultiPortRef)
    if not multi_src and not multi_dst:
        return [conn]
    if multi_src != multi_dst:
        # lone port against a port list: no broadcasting
        raise ExpandError(f"cannot pair single port with port list in {render_port_ref(src)} -> {render_port_ref(dst)}")
    if len(src.ports) != len(dst.ports):
        raise ExpandError(
            f"port list lengths differ ({len(src.ports)} vs {len(dst.ports)}) in "
            f"{render_port_ref(src)} -> {render_port_ref(dst)}"
        )
    return [
        Connection(PortRef(src.block, a), PortRef(dst.block, b))
        for a, b in zip(src.ports, dst.ports)
    ]


def canonicalize(model: SystemModel) -> SystemModel:
    """Expand port lists, sort blocks and connections, drop duplicate connections.

    A port list whose lengths disagree cannot be expanded; it is kept as written
    so that the validator can report it.
    """
    blocks = {}
    for name in sorted(model.blocks):
        blk = model.blocks[name]
        inner = canonicalize(blk.inner) if blk.inner is not None else None
        params = {k: blk.params[k] for k in sorted(blk.params)}
        blocks[name] = BlockInstance(blk.type_name, params, inner, blk.summary)
    seen = set()
    conns = []
    for c in model.connections:
        try:
            expanded = expand_connection(c)
        except ExpandError:
            expanded = [c]
        for e in expanded:
            if e not in seen:
                seen.add(e)
                conns.append(e)
    conns.sort(key=Connection.sort_key)
    return SystemModel(blocks, tuple(conns))


def merge(a: SystemModel, b: SystemModel) -> SystemModel:
    """Union of two partial models, returned in canonical form.

    Blocks present in both must agree exactly; otherwise :class:`MergeConflict`.
    """
    blocks = dict(a.blocks)
    for name, blk in b.blocks.items():
        if name in blocks and blocks[name] != blk:
            raise MergeConflict(name)
        blocks[name] = blk
    return canonicalize(SystemModel(blocks, a.connections + b.connections))


def endpoint_blocks(conn: Connection):
    return conn.src.block, conn.dst.block


# -- token estimate ----------------------------------------------------------

_TOKEN = re.compile(r"\w+|[^\w\s]")


def estimate_tokens(text: str) -> int:
    """Word runs plus non-space punctuation characters.

    Stands in for an LLM tokenizer when only relative sizes matter.
    """
    return sum(1 for _ in _TOKEN.finditer(text))
