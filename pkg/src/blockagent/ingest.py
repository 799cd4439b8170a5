"""Simulink-style XML to model, and back.

Only the System / Block / Line / P subset is read. Layout, styling and
library-source entries are dropped; everything else under a block becomes a
parameter. ``X_unit`` entries are folded into ``X`` as a :class:`Quantity`
and ``X_conf`` entries (run-time configurability flags) are discarded. A
variable initialization target ``X`` (recognized by a sibling ``X_specify``
entry) is dropped together with its ``_unit``, ``_conf``, ``_specify`` and
``_priority`` entries, since the model carries no initial state.

Line endpoints have the form ``SID#out:N`` / ``SID#in:N`` (signal) or
``SID#lconn:N`` / ``SID#rconn:N`` (conserving).
"""
from __future__ import annotations

import math
import re
import xml.etree.ElementTree as ET
from dataclasses import dataclass, field
from typing import Optional

from .errors import IngestError
from .ir import (
    SUBSYSTEM,
    BlockInstance,
    Connection,
    ConservingLeft,
    ConservingRight,
    PortRef,
    Quantity,
    SignalPort,
    SystemModel,
    canonicalize,
)

DROP_PARAMS = frozenset({
    # layout and styling
    "Position", "ZOrder", "BlockMirror", "BlockRotation", "NamePlacement", "ShowName",
    "FontName", "FontSize", "ForegroundColor", "BackgroundColor", "DropShadow", "Points",
    "Location", "Open", "ZoomFactor", "Ports", "HideAutomaticName",
    # library source; SourceBlock is consumed for the type
    "LibraryVersion", "SourceBlock", "SourceType", "SourceProductName", "SourceProductBaseCode",
    "ComponentPath", "ClassName", "SchemaVersion", "ComponentVariants", "ComponentVariantNames",
    # subsystem execution flags
    "RequestExecContextInheritance", "SystemSampleTime", "TreatAsAtomicUnit", "MinAlgLoopOccurrences",
    "PropExecContextOutsideSubsystem", "ContentPreviewEnabled", "Variant",
})

# Simulink BlockType spellings that differ from catalog type names
BLOCKTYPE_TO_TYPE = {"SubSystem": SUBSYSTEM, "PMIOPort": "Connection Port", "Saturate": "Saturation"}
TYPE_TO_BLOCKTYPE = {v: k for k, v in BLOCKTYPE_TO_TYPE.items()}
BUILTIN_TYPES = frozenset({"Constant", "Gain", "Sum", "Saturation", "Scope", "Mux", "Inport", "Outport",
                           SUBSYSTEM, "Connection Port"})

_ENDPOINT = re.compile(r"\s*([^#\s]+)#(out|in|lconn|rconn):(\d+)\s*")
_INT = re.compile(r"[+-]?\d+")
_FLOAT = re.compile(r"[+-]?(\d+\.\d*|\.\d+|\d+)([eE][+-]?\d+)?")
_SLASH_SUB = "∕"

# initialization targets a saved physical block carries per port domain
_DOMAIN_VARIABLES = {
    "thermal": (("T", 293.15, "K"), ("Q", 0, "W")),
    "thermal-liquid": (("p_I", 0.101325, "MPa"), ("T_I", 293.15, "K"), ("mdot_A", 0, "kg/s")),
    "electrical": (("i", 0, "A"), ("v", 0, "V")),
    "mechanical": (("w", 0, "rad/s"), ("t", 0, "N*m")),
}
# editor state saved on every System element (System-level P nodes are never read)
_SYSTEM_STATE = (("PortBlocksUseCompactNotation", "off"), ("SetExecutionDomain", "off"),
                 ("ExecutionDomainType", "Deduce"), ("ModelBrowserVisibility", "off"),
                 ("ModelBrowserWidth", 200), ("ScreenColor", "white"), ("PaperOrientation", "landscape"),
                 ("PaperPositionMode", "auto"), ("PaperType", "usletter"), ("PaperUnits", "inches"),
                 ("TiledPaperMargins", "[0.500000, 0.500000, 0.500000, 0.500000]"),
                 ("TiledPageScale", 1), ("ShowPageBoundaries", "off"))
# execution flags saved on Subsystem blocks
_SUBSYSTEM_FLAGS = (("RequestExecContextInheritance", "off"), ("SystemSampleTime", -1),
                    ("TreatAsAtomicUnit", "off"), ("MinAlgLoopOccurrences", "off"),
                    ("PropExecContextOutsideSubsystem", "off"), ("ContentPreviewEnabled", "on"),
                    ("Variant", "off"))
_STYLE = (("ForegroundColor", "black"), ("BackgroundColor", "white"), ("DropShadow", "off"),
          ("FontName", "Helvetica"), ("FontSize", 10))


@dataclass
class IngestResult:
    model: SystemModel
    remarks: list = field(default_factory=list)
    sids: dict = field(default_factory=dict)  # SID -> block name


def normalize_name(raw: str) -> str:
    return " ".join(raw.split())


def coerce_value(text: str):
    """Interpret a P-node text as number, number list, or plain string."""
    t = (text or "").strip()
    if _INT.fullmatch(t):
        return int(t)
    if _FLOAT.fullmatch(t):
        v = float(t)
        return v if math.isfinite(v) else t
    if t.startswith("[") and t.endswith("]"):
        parts = [p for p in re.split(r"[\s,;]+", t[1:-1].strip()) if p]
        if parts and all(_FLOAT.fullmatch(p) for p in parts):
            return tuple(int(p) if _INT.fullmatch(p) else float(p) for p in parts)
    return " ".join(t.split()) if "\n" in t else t


def _p_nodes(elem):
    out = []
    for child in elem:
        if child.tag == "P":
            out.append((child.get("Name"), child.text or ""))
        elif child.tag == "InstanceData":
            out.extend((c.get("Name"), c.text or "") for c in child if c.tag == "P")
    return out


def _block_params(pnodes, where, remarks):
    names = {n for n, _ in pnodes}
    targets = {n[: -len("_specify")] for n in names if n and n.endswith("_specify")}
    raw = {}
    for name, text in pnodes:
        if not name or name in DROP_PARAMS or name.endswith("_conf"):
            continue
        base = name
        for suffix in ("_unit", "_specify", "_priority"):
            if name.endswith(suffix):
                base = name[: -len(suffix)]
        if base in targets:
            continue
        raw[name] = text
    params = {}
    for name, text in raw.items():
        if name.endswith("_unit") and name[:-5] in raw:
            continue
        value = coerce_value(text)
        unit = raw.get(name + "_unit")
        if unit is not None:
            if isinstance(value, (int, float)) and not isinstance(value, bool):
                value = Quantity(value, unit.strip())
            else:
                remarks.append(f"{where}: unit for non-numeric parameter {name!r} ignored")
        params[name] = value
    return params


def _endpoint(text, sids, where):
    m = _ENDPOINT.fullmatch(text or "")
    if not m:
        raise IngestError(f"{where}: malformed line endpoint {text!r}")
    sid, kind, idx = m.group(1), m.group(2), int(m.group(3))
    if sid not in sids:
        raise IngestError(f"{where}: line references unknown SID {sid!r}")
    if idx < 1:
        raise IngestError(f"{where}: port index must be >= 1 in {text!r}")
    port = {"out": SignalPort, "in": SignalPort, "lconn": ConservingLeft, "rconn": ConservingRight}[kind](idx)
    return PortRef(sids[sid], port)


def _line_value(elem, key):
    for child in elem:
        if child.tag == "P" and child.get("Name") == key:
            return child.text
    return None


def _read_system(sys_elem, path, all_sids, remarks) -> SystemModel:
    blocks = {}
    sids = {}
    pending_lines = []
    for child in sys_elem:
        if child.tag == "P":
            continue
        if child.tag == "Block":
            raw_name = child.get("Name")
            sid = child.get("SID")
            if raw_name is None or sid is None:
                raise IngestError(f"{path}: Block without Name or SID")
            name = normalize_name(raw_name)
            if "/" in name:
                fixed = name.replace("/", _SLASH_SUB)
                remarks.append(f"{path}: block {name!r} renamed to {fixed!r}")
                name = fixed
            if name in blocks:
                raise IngestError(f"{path}: duplicate block name {name!r}")
            if sid in all_sids:
                raise IngestError(f"{path}: duplicate SID {sid!r}")
            all_sids[sid] = name
            sids[sid] = name
            where = f"{path}/{name}"
            pnodes = _p_nodes(child)
            source = dict(pnodes).get("SourceBlock")
            btype = child.get("BlockType", "")
            inner_elem = child.find("System")
            inner = None
            if source:
                type_name = normalize_name(source.rsplit("/", 1)[-1])
            else:
                type_name = BLOCKTYPE_TO_TYPE.get(btype, btype)
            if inner_elem is not None:
                if type_name != SUBSYSTEM:
                    remarks.append(f"{where}: nested system under {type_name!r} read as a Subsystem")
                    type_name = SUBSYSTEM
                inner = _read_system(inner_elem, where, all_sids, remarks)
            if not type_name:
                raise IngestError(f"{where}: block has neither SourceBlock nor BlockType")
            params = _block_params(pnodes, where, remarks)
            summary = params.pop("Description", None) if type_name == SUBSYSTEM else None
            if summary is not None and not isinstance(summary, str):
                summary = str(summary)
            blocks[name] = BlockInstance(type_name, params, inner, summary)
        elif child.tag == "Line":
            pending_lines.append(child)
        else:
            remarks.append(f"{path}: ignored <{child.tag}> element")

    conns = []
    for k, line in enumerate(pending_lines):
        where = f"{path} line {k + 1}"
        src = _endpoint(_line_value(line, "Src"), sids, where)
        dsts = []
        direct = _line_value(line, "Dst")
        if direct is not None:
            dsts.append(direct)
        stack = [b for b in line if b.tag == "Branch"]
        while stack:
            br = stack.pop(0)
            d = _line_value(br, "Dst")
            if d is not None:
                dsts.append(d)
            stack.extend(b for b in br if b.tag == "Branch")
        if not dsts:
            remarks.append(f"{where}: line without destination ignored")
        for d in dsts:
            conns.append(Connection(src, _endpoint(d, sids, where)))
    return SystemModel(blocks, tuple(conns))


def ingest_xml(text) -> IngestResult:
    """Parse XML text (str or bytes) into a canonical model plus remarks."""
    try:
        root = ET.fromstring(text)
    except ET.ParseError as exc:
        line, col = exc.position
        msg = str(exc).rsplit(": line", 1)[0]
        raise IngestError(f"malformed XML: {msg} (line {line}, column {col + 1})") from None
    if root.tag != "System":
        found = root.find(".//System")
        if found is None:
            raise IngestError(f"expected a <System> root, got <{root.tag}>")
        root = found
    remarks, sids = [], {}
    model = _read_system(root, "", sids, remarks)
    return IngestResult(canonicalize(model), remarks, sids)


def parse_model_xml(text) -> SystemModel:
    return ingest_xml(text).model


def read_model_xml(path) -> IngestResult:
    with open(path, "rb") as fh:
        return ingest_xml(fh.read())


# -- rendering ---------------------------------------------------------------

def format_value(value) -> str:
    if isinstance(value, bool):
        return "on" if value else "off"
    if isinstance(value, float):
        return repr(value)
    if isinstance(value, tuple):
        return "[" + " ".join(format_value(v) for v in value) + "]"
    return str(value)


def _esc(text):
    return (str(text).replace("&", "&amp;").replace("<", "&lt;").replace(">", "&gt;")
            .replace('"', "&quot;").replace("\n", "&#xA;"))


class _XmlWriter:
    """Emits the verbose layout a diagram editor would save, for compression tests."""

    def __init__(self, catalog=None, include_defaults=False, layout=True):
        self.catalog = catalog
        self.include_defaults = include_defaults
        self.layout = layout
        self.lines = []
        self.next_sid = 1
        self.zorder = 1

    def p(self, depth, name, value):
        self.lines.append(f'{"  " * depth}<P Name="{_esc(name)}">{_esc(format_value(value))}</P>')

    def system(self, model, depth, top=False):
        ind = "  " * depth
        self.lines.append(f"{ind}<System>")
        if self.layout:
            self.p(depth + 1, "Location", "[-1, -8, 1921, 1041]")
            self.p(depth + 1, "Open", "on" if top else "off")
            self.p(depth + 1, "ZoomFactor", 100)
            for k, v in _SYSTEM_STATE:
                self.p(depth + 1, k, v)
            if top:
                self.p(depth + 1, "ReportName", "simulink-default.rpt")
        sid_of = {}
        hw_index = len(self.lines)
        for i, name in enumerate(sorted(model.blocks)):
            sid_of[name] = str(self.next_sid)
            self.next_sid += 1
            self.block(name, model.blocks[name], sid_of[name], depth + 1, i)
        for k, c in enumerate(model.connections):
            self.line(c, sid_of, depth + 1, k)
        self.lines.append(f"{ind}</System>")
        if top and self.layout:
            self.lines.insert(hw_index, f'{"  " * (depth + 1)}<P Name="SIDHighWatermark">{self.next_sid - 1}</P>')

    def block(self, name, blk, sid, depth, i):
        bdef = self.catalog.get(blk.type_name) if self.catalog is not None else None
        builtin = blk.type_name in BUILTIN_TYPES
        btype = TYPE_TO_BLOCKTYPE.get(blk.type_name, blk.type_name) if builtin else "Reference"
        ind = "  " * depth
        self.lines.append(f'{ind}<Block BlockType="{_esc(btype)}" Name="{_esc(name)}" SID="{sid}">')
        d = depth + 1
        if bdef is not None and self.layout:
            lc = sum(1 for s in bdef.ports if s.token.startswith("LConn"))
            rc = sum(1 for s in bdef.ports if s.token.startswith("RConn"))
            ins = sum(1 for s in bdef.ports if s.domain == "signal-in")
            outs = sum(1 for s in bdef.ports if s.domain == "signal-out")
            attrs = " ".join(f'{k}="{v}"' for k, v in (("in", ins), ("out", outs), ("lconn", lc), ("rconn", rc)) if v)
            self.lines.append(f"{'  ' * d}<PortCounts {attrs}/>")
            self.p(d, "Ports", f"[{ins}, {outs}, 0, 0, 0, {lc}, {rc}]")
        if self.layout:
            x, y = 100 + 120 * (i % 6), 80 + 90 * (i // 6)
            self.p(d, "Position", f"[{x}, {y}, {x + 40}, {y + 28}]")
            self.p(d, "ZOrder", self.zorder)
            self.zorder += 1
            if i % 3 == 1:
                self.p(d, "BlockMirror", "on")
                self.p(d, "NamePlacement", "alternate")
            for k, v in _STYLE:
                self.p(d, k, v)
            self.p(d, "HideAutomaticName", "off" if builtin else "on")
            if bdef is not None:
                for spec in bdef.ports:
                    if spec.is_signal:
                        self._port_node(d, spec)
        if not builtin:
            lib = bdef.library_path if bdef is not None else blk.type_name
            if self.layout:
                self.p(d, "LibraryVersion", "24001000.1")
            self.p(d, "SourceBlock", lib)
            if self.layout:
                self.p(d, "SourceType", blk.type_name)
                self.p(d, "SourceProductName", "Simscape")
                self.p(d, "SourceProductBaseCode", "SS")
        if blk.summary is not None:
            self.p(d, "Description", blk.summary)
        if blk.type_name == SUBSYSTEM and self.layout:
            for k, v in _SUBSYSTEM_FLAGS:
                self.p(d, k, v)
        params = dict(blk.params)
        if self.include_defaults and bdef is not None:
            for spec in bdef.params:
                if spec.name not in params and spec.default is not None:
                    params[spec.name] = Quantity(spec.default, spec.unit) if spec.unit else spec.default
        if not builtin and self.layout and bdef is not None:
            self.lines.append(f"{'  ' * d}<InstanceData>")
            self.p(d + 1, "ComponentPath", bdef.library_path.replace("/", ".").replace(" ", "_").lower())
            self.p(d + 1, "ClassName", blk.type_name.replace(" ", ""))
            self.p(d + 1, "SchemaVersion", "1.1.0")
            self.p(d + 1, "ComponentVariants", "")
            self.p(d + 1, "ComponentVariantNames", "")
            self._param_nodes(d + 1, params)
            if self.include_defaults:
                self._variable_nodes(d + 1, bdef, params)
            self.lines.append(f"{'  ' * d}</InstanceData>")
        else:
            self._param_nodes(d, params)
        if blk.inner is not None:
            self.system(blk.inner, d)
        self.lines.append(f"{ind}</Block>")

    def _port_node(self, depth, spec):
        ind = "  " * depth
        kind = "in" if spec.domain == "signal-in" else "out"
        self.lines.append(f"{ind}<Port>")
        self.p(depth + 1, "PortNumber", spec.id.index)
        self.p(depth + 1, "PortType", kind)
        self.p(depth + 1, "Name", spec.alias or "")
        self.p(depth + 1, "PropagatedSignals", "")
        self.lines.append(f"{ind}</Port>")

    def _variable_nodes(self, depth, bdef, params):
        seen = set(params)
        for spec in bdef.ports:
            for var, value, unit in _DOMAIN_VARIABLES.get(spec.domain, ()):
                if var in seen:
                    continue
                seen.add(var)
                self.p(depth, var, value)
                self.p(depth, var + "_unit", unit)
                self.p(depth, var + "_conf", "compiletime")
                self.p(depth, var + "_specify", "off")
                self.p(depth, var + "_priority", "High")

    def _param_nodes(self, depth, params):
        for k in sorted(params):
            v = params[k]
            if isinstance(v, Quantity):
                self.p(depth, k, v.value)
                self.p(depth, k + "_unit", v.unit)
                if self.layout:
                    self.p(depth, k + "_conf", "compiletime")
            else:
                self.p(depth, k, v)

    def line(self, c, sid_of, depth, k):
        def tok(ref, role):
            port = ref.port
            if isinstance(port, SignalPort):
                kind = "out" if role == "src" else "in"
            elif isinstance(port, ConservingLeft):
                kind = "lconn"
            elif isinstance(port, ConservingRight):
                kind = "rconn"
            else:
                raise IngestError(f"cannot write named port {ref} to XML; resolve aliases first")
            if ref.block not in sid_of:
                raise IngestError(f"connection references unknown block {ref.block!r}")
            return f"{sid_of[ref.block]}#{kind}:{port.index}"

        ind = "  " * depth
        self.lines.append(f"{ind}<Line>")
        if self.layout:
            self.p(depth + 1, "ZOrder", self.zorder)
            self.zorder += 1
        self.p(depth + 1, "Src", tok(c.src, "src"))
        self.p(depth + 1, "Dst", tok(c.dst, "dst"))
        if self.layout:
            self.p(depth + 1, "Points", "[0, 40; 25, 0]" if k % 2 == 0 else "[20, 0]")
        self.lines.append(f"{ind}</Line>")


def render_model_xml(model: SystemModel, catalog=None, include_defaults=False, layout=True) -> str:
    """Write a model as System/Block/Line/P XML.

    Named-alias ports must be resolved beforehand (see :func:`resolve_aliases`).
    With ``layout`` the output carries the positions, z-orders and library-source
    entries a saved diagram would, all of which :func:`ingest_xml` drops again.
    """
    w = _XmlWriter(catalog, include_defaults, layout)
    w.lines.append('<?xml version="1.0" encoding="utf-8"?>')
    w.system(canonicalize(model), 0, top=True)
    return "\n".join(w.lines) + "\n"
