"""Subsystem folding and inlining.

A Subsystem block carries an inner model whose top level holds boundary
blocks: ``Inport`` / ``Outport`` (signal, numbered by their ``Port`` param) and
``Connection Port`` (conserving, ``Port`` plus ``Side`` Left/Right). An outer
connection to ``Sub/2`` is routed through the Inport with ``Port`` 2; a named
alias ``Sub/T_meas`` picks the boundary block named ``T_meas``.

:func:`encapsulate` folds clusters of blocks into such subsystems and
:func:`flatten` undoes it exactly.
"""
from __future__ import annotations

from typing import Callable, Iterable, Optional

from .errors import ExpandError, FlattenError
from .ir import (
    SUBSYSTEM,
    BlockInstance,
    Connection,
    ConservingLeft,
    ConservingRight,
    NamedAlias,
    PortRef,
    SignalPort,
    SystemModel,
    canonicalize,
    expand_connection,
    is_conserving,
)

INPORT = "Inport"
OUTPORT = "Outport"
CONN_PORT = "Connection Port"
BOUNDARY_TYPES = (INPORT, OUTPORT, CONN_PORT)
RENAME_SEP = "∕"  # division slash, allowed in block names


def _boundary_port(name, blk):
    """Outer PortId exposed by a boundary block, plus the outer role it serves."""
    k = blk.params.get("Port")
    if isinstance(k, bool) or not isinstance(k, (int, float)) or int(k) != k or k < 1:
        raise FlattenError(f"boundary block {name!r} has no valid 'Port' number")
    k = int(k)
    if blk.type_name == INPORT:
        return SignalPort(k), "dst"
    if blk.type_name == OUTPORT:
        return SignalPort(k), "src"
    side = blk.params.get("Side", "Left")
    if side not in ("Left", "Right"):
        raise FlattenError(f"boundary block {name!r} has invalid Side {side!r}")
    return (ConservingLeft(k) if side == "Left" else ConservingRight(k)), None


def _boundary_table(sub_name, inner):
    table = {}
    for name, blk in inner.blocks.items():
        if blk.type_name not in BOUNDARY_TYPES:
            continue
        try:
            port, role = _boundary_port(name, blk)
        except FlattenError as exc:
            raise FlattenError(f"subsystem {sub_name!r}: {exc}", sub_name) from None
        key = (port, role)
        if key in table:
            raise FlattenError(f"subsystem {sub_name!r} exposes port {port} twice", sub_name)
        table[key] = name
    return table


def _find_boundary(sub_name, table, port, role, inner):
    if isinstance(port, NamedAlias):
        for (pid, prole), name in table.items():
            if name == port.name and (prole is None or prole == role):
                return name
    elif isinstance(port, SignalPort):
        name = table.get((port, role))
        if name is not None:
            return name
    else:
        name = table.get((port, None))
        if name is not None:
            return name
    raise FlattenError(f"connection to {sub_name}/{port} has no matching boundary port", sub_name)


def _expand_all(conns, where):
    out = []
    for c in conns:
        try:
            out.extend(expand_connection(c))
        except ExpandError as exc:
            raise FlattenError(f"{where}: {exc}", where) from None
    return out


def _inline(model: SystemModel, sub_name: str) -> SystemModel:
    sub = model.blocks[sub_name]
    if sub.inner is None:
        raise FlattenError(f"subsystem {sub_name!r} has no inner model", sub_name)
    inner = sub.inner
    table = _boundary_table(sub_name, inner)
    boundary = set(table.values())

    outer_names = set(model.blocks) - {sub_name}
    rename = {}
    for name in inner.blocks:
        if name in boundary:
            continue
        new = name
        if new in outer_names:
            new = f"{sub_name}{RENAME_SEP}{name}"
            if new in outer_names:
                raise FlattenError(f"cannot rename inner block {name!r} of {sub_name!r}", sub_name)
        rename[name] = new

    def rn(ref):
        # unknown names pass through; the validator reports them
        return PortRef(rename.get(ref.block, ref.block), ref.port)

    # inner endpoints attached to each boundary block
    attached = {b: [] for b in boundary}
    inner_conns = []
    for c in _expand_all(inner.connections, sub_name):
        sb, db = c.src.block in boundary, c.dst.block in boundary
        if sb and db:
            raise FlattenError(f"subsystem {sub_name!r} wires two boundary ports together", sub_name)
        if sb:
            attached[c.src.block].append(rn(c.dst))
        elif db:
            attached[c.dst.block].append(rn(c.src))
        else:
            inner_conns.append(Connection(rn(c.src), rn(c.dst)))

    def options(ref, role):
        if ref.block != sub_name:
            return [ref]
        b = _find_boundary(sub_name, table, ref.port, role, inner)
        return attached[b]

    conns = []
    touching = []
    for c in model.connections:
        if sub_name in (c.src.block, c.dst.block):
            touching.append(c)
        else:
            conns.append(c)
    for c in _expand_all(touching, sub_name):
        for s in options(c.src, "src"):
            for d in options(c.dst, "dst"):
                conns.append(Connection(s, d))

    blocks = {n: b for n, b in model.blocks.items() if n != sub_name}
    for name, blk in inner.blocks.items():
        if name not in boundary:
            blocks[rename[name]] = blk
    return SystemModel(blocks, tuple(conns) + tuple(inner_conns))


def flatten(model: SystemModel, names: Optional[Iterable[str]] = None, recursive: bool = True) -> SystemModel:
    """Inline Subsystem blocks (all of them, or only ``names``) and canonicalize."""
    targets = sorted(n for n, b in model.blocks.items() if b.type_name == SUBSYSTEM)
    if names is not None:
        wanted = set(names)
        targets = [n for n in targets if n in wanted]
    work = model
    for name in targets:
        blk = work.blocks[name]
        if recursive and blk.inner is not None:
            inner = flatten(blk.inner, recursive=True)
            # keep boundary blocks of this level; only nested subsystems were inlined
            work = work.replace(blocks={**work.blocks, name: BlockInstance(SUBSYSTEM, blk.params, inner, blk.summary)})
        work = _inline(work, name)
    return canonicalize(work)


# -- folding -----------------------------------------------------------------

def _components(names, conns):
    parent = {n: n for n in names}

    def find(x):
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    for c in conns:
        a, b = c.src.block, c.dst.block
        if a in parent and b in parent:
            ra, rb = find(a), find(b)
            if ra != rb:
                parent[max(ra, rb)] = min(ra, rb)
    groups = {}
    for n in sorted(names):
        groups.setdefault(find(n), []).append(n)
    return sorted(groups.values(), key=lambda g: g[0])


def default_summary(inner: SystemModel) -> str:
    counts = {}
    for blk in inner.blocks.values():
        if blk.type_name in BOUNDARY_TYPES:
            continue
        counts[blk.type_name] = counts.get(blk.type_name, 0) + 1
    parts = [f"{n} x {t}" if n > 1 else t for t, n in sorted(counts.items())]
    return "Groups " + ", ".join(parts) + "."


def _fresh(prefix, taken):
    i = 1
    while f"{prefix}{i}" in taken:
        i += 1
    return f"{prefix}{i}"


def encapsulate(
    model: SystemModel,
    keep: Iterable[str],
    summarizer: Optional[Callable[[SystemModel], str]] = None,
) -> SystemModel:
    """Fold every connected cluster of non-kept blocks into one Subsystem.

    Top-level boundary blocks of the model itself are never folded, so that
    :func:`flatten` cannot mistake them for subsystem ports.
    """
    summarizer = summarizer or default_summary
    model = canonicalize(model)
    keep = set(keep)
    missing = keep - set(model.blocks)
    if missing:
        raise ValueError(f"keep names blocks not in the model: {sorted(missing)}")
    loose = [
        n for n, b in model.blocks.items()
        if n not in keep and b.type_name not in BOUNDARY_TYPES
    ]
    if not loose:
        return model
    conns = [c for c in model.connections if not c.is_multi]
    if len(conns) != len(model.connections):
        raise FlattenError("cannot encapsulate a model with unexpandable port lists")

    blocks = {n: b for n, b in model.blocks.items() if n not in loose}
    taken = set(model.blocks)
    group_of = {}
    groups = _components(loose, conns)
    sub_names = []
    for g in groups:
        name = _fresh("Subsystem ", taken)
        taken.add(name)
        sub_names.append(name)
        for n in g:
            group_of[n] = name

    inner_blocks = {s: {n: model.blocks[n] for n in g} for s, g in zip(sub_names, groups)}
    inner_conns = {s: [] for s in sub_names}
    port_of = {}  # (sub, inside endpoint, role kind) -> outer PortId
    counters = {s: {"in": 0, "out": 0, "conn": 0} for s in sub_names}
    outer_conns = []

    def boundary_for(sub, ref, role):
        """Outer port of ``sub`` standing for inside endpoint ``ref``."""
        kind = "conn" if role is None else ("out" if role == "src" else "in")
        key = (ref, kind)
        box = port_of.setdefault(sub, {})
        if key in box:
            return box[key]
        counters[sub][kind] += 1
        k = counters[sub][kind]
        names_taken = inner_blocks[sub]
        if kind == "in":
            bname = _fresh("In", names_taken)
            inner_blocks[sub][bname] = BlockInstance(INPORT, {"Port": k})
            inner_conns[sub].append(Connection(PortRef(bname, SignalPort(1)), ref))
            pid = SignalPort(k)
        elif kind == "out":
            bname = _fresh("Out", names_taken)
            inner_blocks[sub][bname] = BlockInstance(OUTPORT, {"Port": k})
            inner_conns[sub].append(Connection(ref, PortRef(bname, SignalPort(1))))
            pid = SignalPort(k)
        else:
            bname = _fresh("Conn", names_taken)
            inner_blocks[sub][bname] = BlockInstance(CONN_PORT, {"Port": k, "Side": "Left"})
            inner_conns[sub].append(Connection(ref, PortRef(bname, ConservingRight(1))))
            pid = ConservingLeft(k)
        box[key] = pid
        return pid

    for c in conns:
        gs, gd = group_of.get(c.src.block), group_of.get(c.dst.block)
        if gs is not None and gs == gd:
            inner_conns[gs].append(c)
            continue
        src, dst = c.src, c.dst
        signal = not (is_conserving(src.port) or is_conserving(dst.port))
        if gs is not None:
            src = PortRef(gs, boundary_for(gs, c.src, "src" if signal else None))
        if gd is not None:
            dst = PortRef(gd, boundary_for(gd, c.dst, "dst" if signal else None))
        outer_conns.append(Connection(src, dst))

    for s in sub_names:
        inner = canonicalize(SystemModel(inner_blocks[s], tuple(inner_conns[s])))
        blocks[s] = BlockInstance(SUBSYSTEM, {}, inner, summarizer(inner))
    return canonicalize(SystemModel(blocks, tuple(outer_conns)))
