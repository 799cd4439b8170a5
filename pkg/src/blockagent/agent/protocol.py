"""Tag grammar for model turns, and origin-tagged transcripts.

A model turn is an optional ``<think>...</think>`` followed by exactly one
action tag: ``<tool>{"name": ..., "args": {...}}</tool>``, ``<python>...</python>``
or ``<answer>...</answer>``. Tool output is wrapped in ``<result>...</result>``
and recorded with origin ``tool`` so that it can be masked out of the
training objective.
"""
from __future__ import annotations

import json
import re
from dataclasses import dataclass, field
from typing import Optional, Union

import numpy as np

from ..errors import ProtocolError
from ..ir import estimate_tokens

ACTION_TAGS = ("tool", "python", "answer")
ALL_TAGS = ("think", "result") + ACTION_TAGS
MODEL, TOOL = "model", "tool"

_TAG = re.compile(r"<(/?)(think|tool|python|answer|result)>")


@dataclass(frozen=True)
class ToolCall:
    name: str
    args: dict = field(default_factory=dict)
    think: Optional[str] = None


@dataclass(frozen=True)
class EditScript:
    text: str
    think: Optional[str] = None


@dataclass(frozen=True)
class Answer:
    text: str
    think: Optional[str] = None

    @property
    def decision(self) -> Optional[str]:
        """``"continue"`` / ``"finish"`` for replanning answers, else None."""
        t = self.text.strip().lower()
        return t if t in ("continue", "finish") else None


Action = Union[ToolCall, EditScript, Answer]


def _tool_from_body(body: str) -> tuple:
    try:
        rec = json.loads(body)
    except json.JSONDecodeError as exc:
        raise ProtocolError(f"tool body is not a JSON record: {exc.msg} at column {exc.colno}") from None
    if not isinstance(rec, dict):
        raise ProtocolError("tool body must be a JSON object")
    if set(rec) != {"name", "args"}:
        raise ProtocolError(f"tool body needs exactly the keys 'name' and 'args', got {sorted(rec)}")
    if not isinstance(rec["name"], str) or not rec["name"]:
        raise ProtocolError("tool 'name' must be a non-empty string")
    if not isinstance(rec["args"], dict):
        raise ProtocolError("tool 'args' must be a JSON object")
    return rec["name"], rec["args"]


def parse_action(turn_text: str) -> Action:
    """Parse one model turn; anything but whitespace outside the tags is rejected."""
    pos = 0
    pieces = []
    n = len(turn_text)
    while True:
        m = _TAG.search(turn_text, pos)
        gap = turn_text[pos:m.start()] if m else turn_text[pos:]
        if gap.strip():
            raise ProtocolError(f"text outside tags: {gap.strip()[:40]!r}")
        if m is None:
            break
        if m.group(1):
            raise ProtocolError(f"unexpected closing tag </{m.group(2)}>")
        tag = m.group(2)
        close = f"</{tag}>"
        end = turn_text.find(close, m.end())
        if end < 0:
            raise ProtocolError(f"<{tag}> is never closed")
        pieces.append((tag, turn_text[m.end():end]))
        pos = end + len(close)
        if pos >= n:
            break
    think = None
    if pieces and pieces[0][0] == "think":
        think = pieces.pop(0)[1]
    tags = [t for t, _ in pieces]
    if "result" in tags:
        raise ProtocolError("<result> is written by the harness, not the model")
    if "think" in tags:
        raise ProtocolError("<think> must come first and only once")
    if len(pieces) != 1:
        raise ProtocolError(f"expected exactly one of <tool>, <python>, <answer>; found {len(pieces)}")
    tag, body = pieces[0]
    if tag == "tool":
        name, args = _tool_from_body(body)
        return ToolCall(name, args, think)
    if tag == "python":
        return EditScript(body, think)
    return Answer(body, think)


def render(action: Action) -> str:
    """Inverse of :func:`parse_action`."""
    head = f"<think>{action.think}</think>" if action.think is not None else ""
    if isinstance(action, ToolCall):
        body = json.dumps({"name": action.name, "args": action.args}, ensure_ascii=False)
        return f"{head}<tool>{body}</tool>"
    if isinstance(action, EditScript):
        return f"{head}<python>{action.text}</python>"
    if isinstance(action, Answer):
        return f"{head}<answer>{action.text}</answer>"
    raise TypeError(f"not an action: {action!r}")


def wrap_result(text: str) -> str:
    return f"<result>{text}</result>"


@dataclass(frozen=True)
class Segment:
    origin: str
    text: str
    tokens: int = -1

    def __post_init__(self):
        if self.origin not in (MODEL, TOOL):
            raise ValueError(f"segment origin must be 'model' or 'tool', got {self.origin!r}")
        if self.tokens < 0:
            object.__setattr__(self, "tokens", estimate_tokens(self.text))

    @classmethod
    def tool(cls, result_text: str) -> "Segment":
        return cls(TOOL, wrap_result(result_text))

    @property
    def result_body(self) -> str:
        """Text inside the ``<result>`` wrapper of a tool segment."""
        return self.text[len("<result>"):-len("</result>")] if self.origin == TOOL else self.text

    def to_record(self) -> dict:
        return {"origin": self.origin, "text": self.text}


@dataclass(frozen=True)
class Transcript:
    segments: tuple = ()
    answer: Optional[str] = None

    def __len__(self):
        return len(self.segments)

    @property
    def total_tokens(self) -> int:
        return sum(s.tokens for s in self.segments)

    def model_turns(self) -> list:
        return [s.text for s in self.segments if s.origin == MODEL]

    def results(self) -> list:
        return [s.result_body for s in self.segments if s.origin == TOOL]

    def append(self, segment: Segment) -> "Transcript":
        return Transcript(self.segments + (segment,), self.answer)

    def with_answer(self, answer: Optional[str]) -> "Transcript":
        return Transcript(self.segments, answer)

    def to_records(self) -> list:
        return [s.to_record() for s in self.segments]

    @classmethod
    def from_records(cls, records, answer=None) -> "Transcript":
        return cls(tuple(Segment(r["origin"], r["text"]) for r in records), answer)


def build_mask(transcript: Transcript) -> np.ndarray:
    """1 for every model-generated token, 0 for every tool-returned token."""
    parts = [np.full(s.tokens, 1 if s.origin == MODEL else 0, dtype=np.int8) for s in transcript.segments]
    return np.concatenate(parts) if parts else np.zeros(0, dtype=np.int8)


def tool_spans(transcript: Transcript) -> list:
    """Half-open token ranges covered by tool segments."""
    spans, pos = [], 0
    for s in transcript.segments:
        if s.origin == TOOL:
            spans.append((pos, pos + s.tokens))
        pos += s.tokens
    return spans


def write_transcript_jsonl(transcript: Transcript, path):
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for rec in transcript.to_records():
            fh.write(json.dumps(rec, ensure_ascii=False) + "\n")


def read_transcript_jsonl(path) -> Transcript:
    with open(path, encoding="utf-8") as fh:
        return Transcript.from_records([json.loads(line) for line in fh if line.strip()])
