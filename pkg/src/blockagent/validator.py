"""Static model checks: block selection, port wiring, domains, parameters.

Every finding is a :class:`Diagnostic` with a stable code:

====  ========  ==========================================================
code  severity  meaning
====  ========  ==========================================================
E001  Error     block type not in the catalog
E002  Error     port does not exist on the block (or port list malformed)
E003  Error     domain mismatch across a connection
E004  Error     required parameter missing
E005  Error     parameter value outside its range, kind or enum
E006  Error     physical network without a Solver Configuration block
E007  Error     connection endpoint names a block absent from the model
E009  Error     signal input driven by more than one connection
W001  Warning   required port left unconnected
W002  Warning   unknown parameter name
====  ========  ==========================================================

Subsystems are flattened first, so inner blocks are checked in place.
"""
from __future__ import annotations

import math
from dataclasses import asdict, dataclass
from typing import Optional

from ._text import edit_distance
from .catalog import (
    ANY_PHYSICAL,
    PHYSICAL_DOMAINS,
    PHYSICAL_SIGNAL,
    SIGNAL_IN,
    SIGNAL_OUT,
    Catalog,
    resolve_port,
)
from .errors import FlattenError, NotFound
from .hierarchy import flatten
from .ir import SUBSYSTEM, MultiPortRef, Quantity, SystemModel, canonicalize, render_port_id, render_port_ref

ERROR = "Error"
WARNING = "Warning"
SOLVER_TYPE = "Solver Configuration"

CODES = {
    "E001": "unknown block type",
    "E002": "unknown port",
    "E003": "domain mismatch",
    "E004": "missing required parameter",
    "E005": "parameter out of range",
    "E006": "missing solver configuration",
    "E007": "unknown endpoint block",
    "E009": "signal input fan-in",
    "W001": "unconnected required port",
    "W002": "unknown parameter",
}


def severity_of(code: str) -> str:
    return ERROR if code.startswith("E") else WARNING


@dataclass(frozen=True)
class Diagnostic:
    code: str
    subject: str
    message: str
    suggestion: Optional[str] = None

    def __post_init__(self):
        if self.code not in CODES:
            raise ValueError(f"unknown diagnostic code {self.code!r}")
        if not self.message:
            raise ValueError("diagnostic message must be non-empty")

    @property
    def severity(self) -> str:
        return severity_of(self.code)

    def sort_key(self):
        return (0 if self.severity == ERROR else 1, self.code, self.subject, self.message)

    def to_record(self) -> dict:
        rec = asdict(self)
        rec["severity"] = self.severity
        return {k: rec[k] for k in ("code", "severity", "subject", "message", "suggestion")}

    def __str__(self):
        s = f"{self.code} {self.severity} {self.subject}: {self.message}"
        if self.suggestion:
            s += f" (did you mean {self.suggestion!r}?)"
        return s


def nearest_name(needle: str, candidates) -> Optional[str]:
    """Closest candidate by edit distance, if within max(2, ceil(len/4))."""
    best, best_d = None, None
    for cand in sorted(candidates):
        d = edit_distance(needle, cand)
        if best_d is None or d < best_d:
            best, best_d = cand, d
    if best is None:
        return None
    if best_d <= max(2, math.ceil(len(needle) / 4)):
        return best
    return None


# -- parameter checks --------------------------------------------------------

def _is_num(v):
    return isinstance(v, (int, float)) and not isinstance(v, bool)


def _check_param(block, name, value, spec):
    subject = f"{block}.{name}"
    if spec.kind == "number":
        if isinstance(value, Quantity):
            nums = [value.value]
        elif _is_num(value):
            nums = [value]
        elif isinstance(value, tuple):
            nums = list(value)
        else:
            return Diagnostic("E005", subject, f"expects a number, got {value!r}")
        if spec.range is not None:
            lo, hi = spec.range
            for v in nums:
                if (lo is not None and v < lo) or (hi is not None and v > hi):
                    return Diagnostic("E005", subject, f"value {v!r} outside [{lo}, {hi}]")
        return None
    if spec.kind == "enum":
        if value not in spec.values:
            hint = nearest_name(str(value), [str(v) for v in spec.values])
            return Diagnostic("E005", subject, f"value {value!r} not one of {list(spec.values)}", hint)
        return None
    if spec.kind == "bool":
        if not (isinstance(value, bool) or value in ("on", "off")):
            return Diagnostic("E005", subject, f"expects on/off, got {value!r}")
        return None
    if spec.kind == "string" and not (isinstance(value, str) or _is_num(value)):
        # dialog fields are text; "1" read back from a file arrives as a number
        return Diagnostic("E005", subject, f"expects a string, got {value!r}")
    return None


# -- network bookkeeping -----------------------------------------------------

class _Union:
    def __init__(self, items):
        self.parent = {x: x for x in items}

    def find(self, x):
        p = self.parent
        while p[x] != x:
            p[x] = p[p[x]]
            x = p[x]
        return x

    def join(self, a, b):
        ra, rb = self.find(a), self.find(b)
        if ra != rb:
            self.parent[max(ra, rb)] = min(ra, rb)


def _domains_compatible(a: str, b: str, src_spec, dst_spec) -> bool:
    if src_spec.is_signal or dst_spec.is_signal:
        return src_spec.domain == SIGNAL_OUT and dst_spec.domain == SIGNAL_IN
    if a == PHYSICAL_SIGNAL or b == PHYSICAL_SIGNAL:
        return a == b
    if a == ANY_PHYSICAL or b == ANY_PHYSICAL:
        return True
    return a == b


def _is_physical(domain):
    return domain in PHYSICAL_DOMAINS or domain == ANY_PHYSICAL


def validate(model: SystemModel, catalog: Catalog) -> list:
    """Run every check and return the sorted diagnostics (empty when clean)."""
    diags = []
    opaque = set()
    try:
        flat = flatten(model)
    except FlattenError as exc:
        # validate what can be seen; the broken subsystem stays a black box
        diags.append(Diagnostic("E002", exc.block or "connections", str(exc)))
        flat = canonicalize(model)
        opaque = {n for n, b in flat.blocks.items() if b.type_name == SUBSYSTEM}

    defs = {}
    for name, blk in flat.blocks.items():
        if name in opaque:
            continue
        try:
            bdef = catalog.resolve_type(blk.type_name)
        except NotFound as exc:
            diags.append(Diagnostic("E001", name, str(exc), exc.suggestions[0] if exc.suggestions else None))
            continue
        defs[name] = bdef
        for spec in bdef.params:
            if spec.required and spec.name not in blk.params:
                diags.append(Diagnostic("E004", f"{name}.{spec.name}", f"required parameter {spec.name!r} is missing"))
        known = [p.name for p in bdef.params]
        for pname, value in blk.params.items():
            spec = bdef.param(pname)
            if spec is None:
                diags.append(
                    Diagnostic("W002", f"{name}.{pname}", f"block type {bdef.type_name!r} has no parameter {pname!r}",
                               nearest_name(pname, known))
                )
                continue
            d = _check_param(name, pname, value, spec)
            if d is not None:
                diags.append(d)

    used = set()  # (block, spec) endpoints that resolved
    fan_in = {}
    net = _Union(sorted(flat.blocks))
    for i, conn in enumerate(flat.connections):
        specs = {}
        for role, ref in (("src", conn.src), ("dst", conn.dst)):
            subject = f"connections[{i}].{role}"
            if isinstance(ref, MultiPortRef):
                diags.append(Diagnostic("E002", subject, f"port list in {render_port_ref(conn.src)} -> "
                                        f"{render_port_ref(conn.dst)} cannot be paired index-wise"))
                continue
            if ref.block not in flat.blocks:
                diags.append(Diagnostic("E007", subject, f"Invalid object name: {render_port_ref(ref)!r}",
                                        nearest_name(ref.block, flat.blocks)))
                continue
            bdef = defs.get(ref.block)
            if bdef is None:
                continue  # unknown type or opaque subsystem, already reported
            try:
                specs[role] = resolve_port(bdef, ref.port, role)
            except NotFound as exc:
                try:
                    other = resolve_port(bdef, ref.port)
                except NotFound:
                    other = None
                if other is not None:
                    diags.append(Diagnostic("E003", subject, f"{render_port_ref(ref)} is a {other.domain} port "
                                            f"and cannot be a connection {role}"))
                else:
                    tokens = [s.token for s in bdef.ports] + [s.alias for s in bdef.ports if s.alias]
                    diags.append(Diagnostic("E002", subject, f"Invalid port name: {render_port_ref(ref)!r}; "
                                            f"valid ports: {', '.join(exc.suggestions)}",
                                            nearest_name(render_port_id(ref.port), tokens)))
        for role, spec in specs.items():
            ref = conn.src if role == "src" else conn.dst
            used.add((ref.block, spec))
        if len(specs) != 2:
            continue
        s, d = specs["src"], specs["dst"]
        if not _domains_compatible(s.domain, d.domain, s, d):
            diags.append(Diagnostic("E003", f"connections[{i}]",
                                    f"{render_port_ref(conn.src)} ({s.domain}) -> {render_port_ref(conn.dst)} ({d.domain})"))
            continue
        if d.domain == SIGNAL_IN:
            key = (conn.dst.block, d.token)
            fan_in[key] = fan_in.get(key, 0) + 1
        if _is_physical(s.domain) and _is_physical(d.domain):
            net.join(conn.src.block, conn.dst.block)

    for (block, token), n in sorted(fan_in.items()):
        if n > 1:
            diags.append(Diagnostic("E009", f"{block}/{token}", f"signal input driven by {n} connections"))

    for name, bdef in defs.items():
        for spec in bdef.ports:
            if spec.required and (name, spec) not in used:
                label = spec.token + (f" ({spec.alias})" if spec.alias else "")
                diags.append(Diagnostic("W001", f"{name}/{spec.token}", f"required port {label} is not connected"))

    networks = {}
    for name in flat.blocks:
        networks.setdefault(net.find(name), []).append(name)
    for members in networks.values():
        needs = [n for n in members if n in defs and defs[n].requires_solver]
        if not needs:
            continue
        if not any(flat.blocks[n].type_name == SOLVER_TYPE for n in members):
            diags.append(Diagnostic("E006", min(members),
                                    f"physical network of {len(members)} block(s) has no {SOLVER_TYPE} block"))

    diags.sort(key=Diagnostic.sort_key)
    return diags


def errors_only(diags) -> list:
    return [d for d in diags if d.severity == ERROR]


def is_executable(model: SystemModel, catalog: Catalog) -> bool:
    return not errors_only(validate(model, catalog))
