"""Model to engineering-tool command script (``.m``).

Emission is deterministic: blocks in canonical (sorted) order, then lines in
canonical order. Port strings use the ``Name/LConn1`` / ``Name/1`` dialect;
named aliases are resolved through the catalog first. Layout is left to the
tool, so the arrange call is written only as a trailing comment.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Union

from .catalog import Catalog, resolve_port
from .errors import EmitError, ExpandError, NotFound
from .hierarchy import BOUNDARY_TYPES, CONN_PORT, INPORT, OUTPORT
from .ir import (
    SUBSYSTEM,
    ConservingLeft,
    ConservingRight,
    Connection,
    MultiPortRef,
    NamedAlias,
    PortRef,
    Quantity,
    SignalPort,
    SystemModel,
    canonicalize,
    expand_connection,
    render_port_ref,
)

SUBSYSTEM_LIBRARY = "built-in/Subsystem"


@dataclass(frozen=True)
class AddBlock:
    library_path: str
    path: str
    params: tuple = ()  # (name, text) pairs


@dataclass(frozen=True)
class AddLine:
    system: str
    src: str
    dst: str
    autorouting: bool = True


@dataclass(frozen=True)
class SetParam:
    path: str
    name: str
    value: str


Command = Union[AddBlock, AddLine, SetParam]


def quote(text: str) -> str:
    return "'" + str(text).replace("'", "''") + "'"


def param_text(value) -> str:
    if isinstance(value, bool):
        return "on" if value else "off"
    if isinstance(value, float):
        return repr(value)
    if isinstance(value, tuple):
        return "[" + " ".join(param_text(v) for v in value) + "]"
    return str(value)


def param_pairs(params) -> tuple:
    pairs = []
    for name in sorted(params):
        v = params[name]
        if isinstance(v, Quantity):
            pairs.append((name, param_text(v.value)))
            pairs.append((name + "_unit", v.unit))
        else:
            pairs.append((name, param_text(v)))
    return tuple(pairs)


def render_command(cmd: Command) -> str:
    if isinstance(cmd, AddBlock):
        args = [quote(cmd.library_path), quote(cmd.path)]
        for k, v in cmd.params:
            args += [quote(k), quote(v)]
        return f"add_block({', '.join(args)});"
    if isinstance(cmd, AddLine):
        tail = ", 'autorouting', 'on'" if cmd.autorouting else ""
        return f"add_line({quote(cmd.system)}, {quote(cmd.src)}, {quote(cmd.dst)}{tail});"
    if isinstance(cmd, SetParam):
        return f"set_param({quote(cmd.path)}, {quote(cmd.name)}, {quote(cmd.value)});"
    raise TypeError(f"not a command: {cmd!r}")


@dataclass(frozen=True)
class CommandScript:
    target: str
    commands: tuple = ()

    def __len__(self):
        return len(self.commands)

    def render(self) -> str:
        out = [f"% model construction commands for {self.target}"]
        out.extend(render_command(c) for c in self.commands)
        out.append(f"% Simulink.BlockDiagram.arrangeSystem({quote(self.target)}, FullLayout='true')")
        return "\n".join(out) + "\n"


# -- alias resolution --------------------------------------------------------

def _subsystem_port(blk, port, role):
    """Indexed outer port of a Subsystem for ``port`` (alias or index)."""
    if not isinstance(port, NamedAlias):
        return port
    inner = blk.inner
    if inner is not None:
        b = inner.blocks.get(port.name)
        if b is not None and b.type_name in BOUNDARY_TYPES:
            k = b.params.get("Port")
            if isinstance(k, (int, float)) and not isinstance(k, bool):
                k = int(k)
                if b.type_name == INPORT and role == "dst" or b.type_name == OUTPORT and role == "src":
                    return SignalPort(k)
                if b.type_name == CONN_PORT:
                    return ConservingRight(k) if b.params.get("Side") == "Right" else ConservingLeft(k)
    raise NotFound(f"subsystem has no port {port.name!r}")


def resolve_ref(model: SystemModel, ref: PortRef, role: str, catalog: Catalog) -> PortRef:
    if not isinstance(ref.port, NamedAlias):
        return ref
    blk = model.blocks.get(ref.block)
    if blk is None:
        raise EmitError(f"connection endpoint {render_port_ref(ref)!r} names no block in the model")
    try:
        if blk.type_name == SUBSYSTEM:
            return PortRef(ref.block, _subsystem_port(blk, ref.port, role))
        bdef = catalog.resolve_type(blk.type_name)
        return PortRef(ref.block, resolve_port(bdef, ref.port, role).id)
    except NotFound as exc:
        raise EmitError(f"cannot resolve port {render_port_ref(ref)!r}: {exc}") from None


def resolve_aliases(model: SystemModel, catalog: Catalog) -> SystemModel:
    """Rewrite named-alias ports as indexed ports, recursively."""
    model = canonicalize(model)
    blocks = {}
    for name, blk in model.blocks.items():
        if blk.inner is not None:
            blk = type(blk)(blk.type_name, blk.params, resolve_aliases(blk.inner, catalog), blk.summary)
        blocks[name] = blk
    model = model.replace(blocks=blocks)
    conns = []
    for c in model.connections:
        try:
            parts = expand_connection(c)
        except ExpandError as exc:
            raise EmitError(str(exc)) from None
        for e in parts:
            conns.append(Connection(resolve_ref(model, e.src, "src", catalog), resolve_ref(model, e.dst, "dst", catalog)))
    return canonicalize(model.replace(connections=conns))


# -- emission ----------------------------------------------------------------

def _emit_system(model, catalog, system, existing, out):
    old_blocks = existing.blocks if existing is not None else {}
    for name, blk in model.blocks.items():
        path = f"{system}/{name}"
        prev = old_blocks.get(name)
        if prev is not None and prev.type_name == blk.type_name:
            # block already there: only push changed parameters
            for k, v in param_pairs({k: v for k, v in blk.params.items() if prev.params.get(k) != v}):
                out.append(SetParam(path, k, v))
            if blk.inner is not None:
                _emit_system(blk.inner, catalog, path, prev.inner, out)
            continue
        if blk.type_name == SUBSYSTEM:
            out.append(AddBlock(SUBSYSTEM_LIBRARY, path, param_pairs(blk.params)))
            if blk.summary:
                out.append(SetParam(path, "Description", blk.summary))
            if blk.inner is not None:
                _emit_system(blk.inner, catalog, path, None, out)
            continue
        bdef = catalog.get(blk.type_name)
        if bdef is None:
            raise EmitError(f"block {name!r}: unknown type {blk.type_name!r}")
        out.append(AddBlock(bdef.library_path, path, param_pairs(blk.params)))
    old_conns = set(existing.connections) if existing is not None else set()
    for c in model.connections:
        if isinstance(c.src, MultiPortRef) or isinstance(c.dst, MultiPortRef):
            raise EmitError(f"unexpanded port list in {render_port_ref(c.src)} -> {render_port_ref(c.dst)}")
        if c in old_conns:
            continue
        out.append(AddLine(system, render_port_ref(c.src), render_port_ref(c.dst)))


def emit_script(model: SystemModel, catalog: Catalog, target_name: str,
                existing: Optional[SystemModel] = None) -> CommandScript:
    """Commands that build ``model`` in ``target_name``.

    With ``existing`` (the model already open in the tool) only the difference
    is emitted: new blocks, changed parameters and new lines.
    """
    resolved = resolve_aliases(model, catalog)
    base = resolve_aliases(existing, catalog) if existing is not None else None
    out = []
    _emit_system(resolved, catalog, target_name, base, out)
    return CommandScript(target_name, tuple(out))


def lint_script(script: CommandScript, preexisting=()) -> list:
    """Problems where a line endpoint names a block not added earlier."""
    known = {f"{script.target}/{n}" for n in preexisting}
    problems = []
    for i, cmd in enumerate(script.commands):
        if isinstance(cmd, AddBlock):
            if cmd.path in known:
                problems.append(f"command {i + 1}: block {cmd.path!r} added twice")
            known.add(cmd.path)
        elif isinstance(cmd, AddLine):
            for end in (cmd.src, cmd.dst):
                block = end.rsplit("/", 1)[0]
                if f"{cmd.system}/{block}" not in known:
                    problems.append(f"command {i + 1}: line endpoint {end!r} names a block not added earlier")
    return problems


def write_script(script: CommandScript, path):
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(script.render())


def block_paths(model: SystemModel, prefix: str = "") -> list:
    """Every block path (``Sub/Inner``) in the model, relative to its root."""
    out = []
    for name, blk in model.blocks.items():
        out.append(prefix + name)
        if blk.inner is not None:
            out.extend(block_paths(blk.inner, prefix + name + "/"))
    return out
