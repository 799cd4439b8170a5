"""Restricted interpreter for ``<python>`` edit scripts.

Only these statement forms are accepted, all rooted at the working model
variable (``sys_dict``)::

    stmt        := root_assign | block_upsert | param_set | conn_append
                 | conn_remove | block_delete
    root_assign := ROOT "=" dict_literal
    block_upsert:= ROOT "[" "'Blocks'" "]" "[" name "]" "=" dict_literal
    param_set   := ROOT "[" "'Blocks'" "]" "[" name "]" "[" param "]" "=" literal
    conn_append := ROOT "[" "'Connections'" "]" ".append(" dict_literal ")"
    conn_remove := ROOT "[" "'Connections'" "]" ".remove(" dict_literal ")"
    block_delete:= "del" ROOT "[" "'Blocks'" "]" "[" name "]"

Literals are Python literals (``ast.literal_eval``). The script runs
on a copy of the model record; the model changes only if every statement
succeeds and the result is a valid model.
"""
from __future__ import annotations

import ast
import copy

from ..errors import BlockAgentError
from ..ir import SystemModel
from ..textio import model_from_record, model_to_record
from .protocol import Segment

ROOT = "sys_dict"
SUCCESS = "Python execution completed. No errors, and no result returned."


class EditError(BlockAgentError):
    def __init__(self, message, line=None):
        self.line = line
        super().__init__(message if line is None else f"line {line}: {message}")


def _literal(node, line):
    try:
        return ast.literal_eval(node)
    except (ValueError, SyntaxError, TypeError):
        raise EditError("only literal values are allowed here", line) from None


def _subscripts(node, line):
    """Unwind ``ROOT[k1][k2]...`` into the list of literal keys."""
    keys = []
    while isinstance(node, ast.Subscript):
        k = _literal(node.slice, line)
        if not isinstance(k, str):
            raise EditError(f"subscript keys must be strings, got {k!r}", line)
        keys.append(k)
        node = node.value
    if not isinstance(node, ast.Name):
        raise EditError("statement must operate on the model variable", line)
    if node.id != ROOT:
        raise EditError(f"name {node.id!r} is not defined", line)
    return keys[::-1]


def _mapping(rec, key, line):
    return rec.setdefault(key, {} if key == "Blocks" else [])


def _apply(rec, stmt):
    line = stmt.lineno
    if isinstance(stmt, ast.Assign):
        if len(stmt.targets) != 1:
            raise EditError("chained assignment is not supported", line)
        target = stmt.targets[0]
        value = _literal(stmt.value, line)
        if isinstance(target, ast.Name):
            if target.id != ROOT:
                raise EditError(f"only {ROOT} may be assigned", line)
            if not isinstance(value, dict):
                raise EditError(f"{ROOT} must be assigned a dict", line)
            rec.clear()
            rec.update(copy.deepcopy(value))
            return
        keys = _subscripts(target, line)
        if len(keys) == 2 and keys[0] == "Blocks":
            if not isinstance(value, dict):
                raise EditError("a block definition must be a dict", line)
            _mapping(rec, "Blocks", line)[keys[1]] = copy.deepcopy(value)
            return
        if len(keys) == 3 and keys[0] == "Blocks":
            blocks = _mapping(rec, "Blocks", line)
            if keys[1] not in blocks:
                raise EditError(f"block {keys[1]!r} does not exist", line)
            blocks[keys[1]][keys[2]] = copy.deepcopy(value)
            return
        raise EditError("unsupported assignment target", line)
    if isinstance(stmt, ast.Expr) and isinstance(stmt.value, ast.Call):
        call = stmt.value
        func = call.func
        if not (isinstance(func, ast.Attribute) and func.attr in ("append", "remove")):
            raise EditError("only .append(...) and .remove(...) calls are supported", line)
        keys = _subscripts(func.value, line)
        if keys != ["Connections"]:
            raise EditError(f"{func.attr} is only supported on the connection list", line)
        if len(call.args) != 1 or call.keywords:
            raise EditError(f"{func.attr} takes exactly one argument", line)
        value = _literal(call.args[0], line)
        if not isinstance(value, dict):
            raise EditError("a connection must be a dict with Src and Dst", line)
        conns = _mapping(rec, "Connections", line)
        if not isinstance(conns, list):
            raise EditError("Connections is not a list", line)
        if func.attr == "remove":
            if value not in conns:
                raise EditError(f"connection {value!r} is not in the model", line)
            conns.remove(value)
        else:
            conns.append(copy.deepcopy(value))
        return
    if isinstance(stmt, ast.Delete):
        for target in stmt.targets:
            keys = _subscripts(target, line)
            if len(keys) != 2 or keys[0] != "Blocks":
                raise EditError("only blocks can be deleted", line)
            blocks = _mapping(rec, "Blocks", line)
            if keys[1] not in blocks:
                raise EditError(f"block {keys[1]!r} does not exist", line)
            del blocks[keys[1]]
        return
    raise EditError(f"unsupported statement ({type(stmt).__name__})", line)


def run_edit_script(model: SystemModel, script: str):
    """(new model, result text, ok). On any failure the input model is returned unchanged."""
    try:
        tree = ast.parse(script)
    except SyntaxError as exc:
        return model, f"Python execution failed: syntax error at line {exc.lineno}: {exc.msg}", False
    rec = model_to_record(model)
    try:
        for stmt in tree.body:
            _apply(rec, stmt)
        new = model_from_record(rec)
    except EditError as exc:
        return model, f"Python execution failed: {exc}", False
    except (ValueError, TypeError, BlockAgentError) as exc:
        return model, f"Python execution failed: resulting model is invalid: {exc}", False
    return new, SUCCESS, True


def apply_edit_script(model: SystemModel, script: str):
    """(new model, tool Segment) for one ``<python>`` body."""
    new, text, _ = run_edit_script(model, script)
    return new, Segment.tool(text)
