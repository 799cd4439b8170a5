"""Dictionary/JSON form of a model.

The on-disk document mirrors what an agent reads and writes::

    {"Blocks": {"Temperature Sensor": {"Type": "Temperature Sensor", "Temperature_measure": "Absolute"}},
     "Connections": [{"Src": "Fuel Cell Stack/LConn1", "Dst": "Temperature Sensor/LConn1"}]}

Inside a block record ``Type`` is required; ``Inner`` (a nested document) and
``Summary`` are reserved for subsystems. Every other key is a parameter.
Numbers with units are written ``{"Value": 300, "Unit": "K"}``.
"""
from __future__ import annotations

import json
import re

from .errors import ParseError
from .ir import (
    BlockInstance,
    Connection,
    Quantity,
    SystemModel,
    parse_endpoint,
    render_port_ref,
)

RESERVED_KEYS = ("Type", "Inner", "Summary")

_ASSIGN_PREFIX = re.compile(r"\s*[A-Za-z_][A-Za-z0-9_]*\s*=\s*")


class _DuplicateKey(Exception):
    def __init__(self, key):
        self.key = key


def _no_duplicates(pairs):
    out = {}
    for k, v in pairs:
        if k in out:
            raise _DuplicateKey(k)
        out[k] = v
    return out


def _locate(text, needle, occurrence):
    pos = -1
    for _ in range(occurrence):
        pos = text.find(needle, pos + 1)
        if pos < 0:
            return None, None
    line = text.count("\n", 0, pos) + 1
    col = pos - (text.rfind("\n", 0, pos) + 1) + 1
    return line, col


def load_record(text: str):
    """Parse document text into plain dicts, rejecting duplicate keys."""
    offset = 0
    m = _ASSIGN_PREFIX.match(text)
    if m and not text.lstrip().startswith("{"):
        offset = m.end()
    body = text[offset:]
    try:
        return json.loads(body, object_pairs_hook=_no_duplicates)
    except _DuplicateKey as exc:
        line, col = _locate(text, json.dumps(exc.key, ensure_ascii=False), 2)
        raise ParseError(f"duplicate key {exc.key!r}", line, col) from None
    except json.JSONDecodeError as exc:
        prefix = text[:offset]
        line = exc.lineno + prefix.count("\n")
        col = exc.colno + (len(prefix) - (prefix.rfind("\n") + 1) if exc.lineno == 1 else 0)
        raise ParseError(exc.msg, line, col) from None


def _param_from_json(name, value):
    if isinstance(value, dict):
        if set(value) == {"Value", "Unit"}:
            try:
                return Quantity(value["Value"], value["Unit"])
            except ValueError as exc:
                raise ParseError(f"parameter {name!r}: {exc}") from None
        raise ParseError(f"parameter {name!r} has an object value")
    if value is None:
        raise ParseError(f"parameter {name!r} is null")
    return value


def _param_to_json(value):
    if isinstance(value, Quantity):
        return {"Value": value.value, "Unit": value.unit}
    if isinstance(value, tuple):
        return list(value)
    return value


def model_from_record(record, path="") -> SystemModel:
    """Build a model from a decoded document; connections are kept as written."""
    if not isinstance(record, dict):
        raise ParseError(f"{path or 'document'} must be an object with 'Blocks'")
    if "Blocks" not in record:
        raise ParseError(f"{path or 'document'} has no 'Blocks' key")
    extra = set(record) - {"Blocks", "Connections"}
    if extra:
        raise ParseError(f"unexpected top-level keys {sorted(extra)}")
    blocks_rec = record["Blocks"]
    conns_rec = record.get("Connections", [])
    if not isinstance(blocks_rec, dict):
        raise ParseError("'Blocks' must be an object")
    if not isinstance(conns_rec, list):
        raise ParseError("'Connections' must be an array")

    blocks = {}
    for name, brec in blocks_rec.items():
        where = f"{path}Blocks[{name!r}]"
        if not isinstance(brec, dict):
            raise ParseError(f"{where} must be an object")
        if "Type" not in brec or not isinstance(brec["Type"], str):
            raise ParseError(f"{where} needs a string 'Type'")
        inner = None
        if "Inner" in brec:
            inner = model_from_record(brec["Inner"], path=f"{where}.Inner.")
        summary = brec.get("Summary")
        if summary is not None and not isinstance(summary, str):
            raise ParseError(f"{where}.Summary must be a string")
        params = {k: _param_from_json(k, v) for k, v in brec.items() if k not in RESERVED_KEYS}
        try:
            blocks[name] = BlockInstance(brec["Type"], params, inner, summary)
        except ValueError as exc:
            raise ParseError(f"{where}: {exc}") from None

    conns = []
    for i, crec in enumerate(conns_rec):
        where = f"{path}Connections[{i}]"
        if not isinstance(crec, dict) or set(crec) != {"Src", "Dst"}:
            raise ParseError(f"{where} must have exactly 'Src' and 'Dst'")
        src = parse_endpoint(crec["Src"], blocks)
        dst = parse_endpoint(crec["Dst"], blocks)
        conns.append(Connection(src, dst))
    try:
        return SystemModel(blocks, tuple(conns))
    except ValueError as exc:
        raise ParseError(str(exc)) from None


def model_to_record(model: SystemModel) -> dict:
    blocks = {}
    for name, blk in model.blocks.items():
        rec = {"Type": blk.type_name}
        for k, v in blk.params.items():
            rec[k] = _param_to_json(v)
        if blk.summary is not None:
            rec["Summary"] = blk.summary
        if blk.inner is not None:
            rec["Inner"] = model_to_record(blk.inner)
        blocks[name] = rec
    conns = [{"Src": render_port_ref(c.src), "Dst": render_port_ref(c.dst)} for c in model.connections]
    return {"Blocks": blocks, "Connections": conns}


def parse_model_text(text: str) -> SystemModel:
    """Parse a model document; a leading ``name =`` assignment is accepted."""
    return model_from_record(load_record(text))


def emit_model_text(model: SystemModel) -> str:
    return json.dumps(model_to_record(model), indent=2, ensure_ascii=False) + "\n"


def read_model(path) -> SystemModel:
    with open(path, encoding="utf-8") as fh:
        return parse_model_text(fh.read())


def write_model(model: SystemModel, path):
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(emit_model_text(model))
