"""Block knowledge base: library paths, port signatures, parameter schemas.

Backs the validator, script emission and the ``search_blocks`` agent tool.
Search is lexical: a query is scored against each block by token overlap with
its type name (weighted 3x), aliases and description.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass
from typing import Optional

from ._text import edit_distance, word_tokens
from .errors import LoadError, NotFound, ParseError
from .ir import (
    NamedAlias,
    PortId,
    SignalPort,
    parse_port_id,
    render_port_id,
)

CATALOG_VERSION = 1

SIGNAL_IN = "signal-in"
SIGNAL_OUT = "signal-out"
PHYSICAL_SIGNAL = "physical-signal"
ANY_PHYSICAL = "any"
PHYSICAL_DOMAINS = frozenset(
    {"thermal", "thermal-liquid", "electrical", "mechanical", "hydraulic", "magnetic"}
)
DOMAINS = PHYSICAL_DOMAINS | {SIGNAL_IN, SIGNAL_OUT, PHYSICAL_SIGNAL, ANY_PHYSICAL}
PARAM_KINDS = ("number", "string", "bool", "enum")

TYPE_WEIGHT = 3
DEFAULT_TOP_K = 3


@dataclass(frozen=True)
class PortSpec:
    id: PortId
    domain: str
    required: bool = False
    alias: Optional[str] = None

    @property
    def is_signal(self) -> bool:
        return self.domain in (SIGNAL_IN, SIGNAL_OUT)

    @property
    def token(self) -> str:
        return render_port_id(self.id)


@dataclass(frozen=True)
class ParamSpec:
    name: str
    kind: str = "number"
    range: Optional[tuple] = None
    values: tuple = ()
    required: bool = False
    default: object = None
    unit: Optional[str] = None


@dataclass(frozen=True)
class BlockDef:
    type_name: str
    library_path: str
    ports: tuple = ()
    params: tuple = ()
    description: str = ""
    aliases: tuple = ()
    library: str = ""
    library_label: str = ""
    needs_solver: Optional[bool] = None

    @property
    def top_library(self) -> str:
        return self.library or self.library_path.split("/", 1)[0]

    @property
    def label(self) -> str:
        if self.library_label:
            return self.library_label
        return " / ".join(self.library_path.split("/")[:-1])

    @property
    def requires_solver(self) -> bool:
        if self.needs_solver is not None:
            return self.needs_solver
        return any(p.domain in PHYSICAL_DOMAINS for p in self.ports)

    def param(self, name) -> Optional[ParamSpec]:
        for p in self.params:
            if p.name == name:
                return p
        return None


def _port_key(spec: PortSpec):
    # a signal index may exist once as input and once as output
    if spec.is_signal:
        return (spec.id, spec.domain)
    return (spec.id, None)


class Catalog:
    """Immutable collection of block definitions with a token index."""

    def __init__(self, defs=()):
        self._defs = {}
        for d in defs:
            if d.type_name in self._defs:
                raise LoadError(f"duplicate block type {d.type_name!r}")
            _check_def(d)
            self._defs[d.type_name] = d
        self._index = {}
        self._fields = {}
        for name, d in self._defs.items():
            t_type = set(word_tokens(d.type_name))
            t_alias = set(word_tokens(" ".join(d.aliases)))
            t_desc = set(word_tokens(d.description))
            self._fields[name] = (t_type, t_alias, t_desc)
            for tok in t_type | t_alias | t_desc:
                self._index.setdefault(tok, set()).add(name)

    def __len__(self):
        return len(self._defs)

    def __contains__(self, type_name):
        return type_name in self._defs

    def __iter__(self):
        return iter(self._defs.values())

    @property
    def type_names(self):
        return sorted(self._defs)

    def get(self, type_name) -> Optional[BlockDef]:
        return self._defs.get(type_name)

    def index_tokens(self, type_name):
        t_type, t_alias, t_desc = self._fields[type_name]
        return t_type | t_alias | t_desc

    # -- lookup --------------------------------------------------------------

    def resolve_type(self, type_name: str) -> BlockDef:
        d = self._defs.get(type_name)
        if d is not None:
            return d
        raise NotFound(f"There is no block named {type_name!r}", self.suggest_types(type_name))

    def suggest_types(self, needle: str, n: int = 3) -> list:
        if not self._defs:
            return []
        probes = [needle]
        if "/" in needle:
            probes.append(needle.rstrip("/").rsplit("/", 1)[-1])

        def dist(name):
            return min(edit_distance(p, name) for p in probes)

        return sorted(self._defs, key=lambda name: (dist(name), name))[:n]

    def score(self, query: str, type_name: str) -> int:
        q = set(word_tokens(query))
        t_type, t_alias, t_desc = self._fields[type_name]
        return TYPE_WEIGHT * len(q & t_type) + len(q & t_alias) + len(q & t_desc)

    def search_blocks(self, query_list, lib: Optional[str] = None, top_k: int = DEFAULT_TOP_K) -> list:
        """Rank blocks for each query; returns one list of BlockDef per query."""
        results = []
        for query in query_list:
            q = set(word_tokens(query))
            candidates = set()
            for tok in q:
                candidates |= self._index.get(tok, set())
            scored = []
            for name in candidates:
                d = self._defs[name]
                if lib and not (d.top_library == lib or d.library_path.startswith(lib)):
                    continue
                s = self.score(query, name)
                if s > 0:
                    scored.append((-s, name))
            scored.sort()
            results.append([self._defs[name] for _, name in scored[:top_k]])
        return results


def resolve_port(bdef: BlockDef, port: PortId, role: Optional[str] = None) -> PortSpec:
    """Find the port spec for ``port`` on ``bdef``.

    ``role`` is ``"src"`` or ``"dst"`` when the port is a connection endpoint;
    it selects the output or input of a signal index that exists both ways.
    """
    if isinstance(port, NamedAlias):
        for spec in bdef.ports:
            if spec.alias == port.name:
                return spec
    else:
        matches = [s for s in bdef.ports if s.id == port]
        if isinstance(port, SignalPort) and role is not None:
            want = SIGNAL_OUT if role == "src" else SIGNAL_IN
            matches = [s for s in matches if s.domain == want]
        if matches:
            return matches[0]
    raise NotFound(
        f"block type {bdef.type_name!r} has no port {render_port_id(port)!r}"
        + (f" as {role}" if role else ""),
        valid_port_tokens(bdef),
    )


def valid_port_tokens(bdef: BlockDef) -> list:
    out = []
    for s in bdef.ports:
        out.append(s.token if not s.alias else f"{s.token} ({s.alias})")
    return out


def format_search_results(queries, results) -> str:
    """Render ranked hits in the text layout the agent sees as a tool result."""
    chunks = []
    for query, hits in zip(queries, results):
        lines = [json.dumps(query, ensure_ascii=False)]
        if not hits:
            lines.append("- No matching blocks found.")
        for i, d in enumerate(hits):
            if i:
                lines.append("")
            lines.append(f"- Block: {d.type_name}")
            lines.append(f"- Library: {d.label}")
            lines.append(f"- Description: {d.description}")
        chunks.append("\n".join(lines))
    return "\n\n".join(chunks)


# -- file format -------------------------------------------------------------

def _check_def(d: BlockDef):
    if not d.type_name:
        raise LoadError("block definition without a type name")
    if not d.library_path:
        raise LoadError(f"block {d.type_name!r} has an empty library_path")
    seen, aliases = set(), set()
    for p in d.ports:
        if p.domain not in DOMAINS:
            raise LoadError(f"block {d.type_name!r}: unknown port domain {p.domain!r}")
        if p.is_signal and not isinstance(p.id, SignalPort):
            raise LoadError(f"block {d.type_name!r}: signal port {p.token} must be numbered")
        key = _port_key(p)
        if key in seen:
            raise LoadError(f"block {d.type_name!r}: port {p.token} declared twice")
        seen.add(key)
        if p.alias is not None:
            if p.alias in aliases:
                raise LoadError(f"block {d.type_name!r}: alias {p.alias!r} declared twice")
            aliases.add(p.alias)
    for p in d.params:
        if p.kind not in PARAM_KINDS:
            raise LoadError(f"block {d.type_name!r}: parameter {p.name!r} has unknown kind {p.kind!r}")
        if p.range is not None:
            lo, hi = p.range
            if (lo if lo is not None else -math.inf) > (hi if hi is not None else math.inf):
                raise LoadError(f"block {d.type_name!r}: parameter {p.name!r} has range lo > hi")


def _def_from_record(rec) -> BlockDef:
    try:
        ports = []
        for p in rec.get("ports", []):
            try:
                pid = parse_port_id(p["id"])
            except ParseError as exc:
                raise LoadError(f"block {rec.get('type')!r}: {exc}") from None
            ports.append(PortSpec(pid, p["domain"], bool(p.get("required", False)), p.get("alias")))
        params = []
        for p in rec.get("params", []):
            rng = p.get("range")
            params.append(
                ParamSpec(
                    name=p["name"],
                    kind=p.get("kind", "number"),
                    range=tuple(rng) if rng is not None else None,
                    values=tuple(p.get("values", ())),
                    required=bool(p.get("required", False)),
                    default=p.get("default"),
                    unit=p.get("unit"),
                )
            )
        return BlockDef(
            type_name=rec["type"],
            library_path=rec.get("library_path", ""),
            ports=tuple(ports),
            params=tuple(params),
            description=rec.get("description", ""),
            aliases=tuple(rec.get("aliases", ())),
            library=rec.get("library", ""),
            library_label=rec.get("library_label", ""),
            needs_solver=rec.get("needs_solver"),
        )
    except (KeyError, TypeError, ValueError) as exc:
        raise LoadError(f"malformed block record {rec!r:.80}: {exc}") from None


def catalog_from_json(text: str) -> Catalog:
    if not text.strip():
        return Catalog()
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise LoadError(f"catalog is not valid JSON: {exc}") from None
    if isinstance(doc, dict):
        version = doc.get("version", CATALOG_VERSION)
        if version != CATALOG_VERSION:
            raise LoadError(f"unsupported catalog version {version!r}")
        records = doc.get("blocks", [])
    else:
        records = doc
    if not isinstance(records, list):
        raise LoadError("catalog 'blocks' must be an array")
    return Catalog(_def_from_record(r) for r in records)


def load_catalog(path) -> Catalog:
    try:
        with open(path, encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise LoadError(f"cannot read catalog {path}: {exc}") from None
    return catalog_from_json(text)


def default_catalog() -> Catalog:
    """The bundled catalog covering every block used in the shipped fixtures."""
    from .fixtures import data_path

    return load_catalog(data_path("catalog.json"))
