"""On-disk task records and the two-stage curriculum split.

A task file is one JSON object::

    {"id": "create/rc_filter", "kind": "Create", "prompt": "...",
     "reference": {"model": {...}, "answer": "..."},
     "initial_model": {...}}            # Modify tasks only

Task directories are laid out as ``<root>/<kind>/<id>.json``.
"""
from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path
from typing import Optional

from .errors import ConfigError, LoadError, ParseError
from .hierarchy import flatten
from .ir import SystemModel
from .reward import TASK_KINDS
from .textio import load_record, model_from_record, model_to_record

STAGE_THRESHOLD = 12


@dataclass(frozen=True)
class TaskRecord:
    id: str
    kind: str
    prompt: str
    reference_model: Optional[SystemModel] = None
    reference_answer: Optional[str] = None
    initial_model: Optional[SystemModel] = None

    def __post_init__(self):
        if self.kind not in TASK_KINDS:
            raise ValueError(f"task {self.id!r}: unknown kind {self.kind!r}")
        if self.kind == "QA":
            if self.reference_answer is None:
                raise ValueError(f"task {self.id!r}: QA tasks need a reference answer")
        elif self.reference_model is None:
            raise ValueError(f"task {self.id!r}: {self.kind} tasks need a reference model")
        if self.kind == "Modify" and self.initial_model is None:
            raise ValueError(f"task {self.id!r}: Modify tasks need an initial model")

    @property
    def block_count(self) -> int:
        """Leaf blocks of the reference model (0 for QA)."""
        if self.reference_model is None:
            return 0
        return len(flatten(self.reference_model).blocks)

    @property
    def reference(self):
        return self.reference_answer if self.kind == "QA" else self.reference_model

    def start_model(self) -> SystemModel:
        return self.initial_model if self.initial_model is not None else SystemModel({}, [])

    def to_record(self) -> dict:
        ref = {}
        if self.reference_model is not None:
            ref["model"] = model_to_record(self.reference_model)
        if self.reference_answer is not None:
            ref["answer"] = self.reference_answer
        rec = {"id": self.id, "kind": self.kind, "prompt": self.prompt, "reference": ref}
        if self.initial_model is not None:
            rec["initial_model"] = model_to_record(self.initial_model)
        return rec


def task_from_record(rec: dict, where: str = "") -> TaskRecord:
    if not isinstance(rec, dict):
        raise ParseError(f"{where}: a task must be a JSON object")
    unknown = set(rec) - {"id", "kind", "prompt", "reference", "initial_model"}
    if unknown:
        raise ParseError(f"{where}: unknown task fields {sorted(unknown)}")
    for key in ("id", "kind", "reference"):
        if key not in rec:
            raise ParseError(f"{where}: task is missing {key!r}")
    ref = rec["reference"]
    if not isinstance(ref, dict):
        raise ParseError(f"{where}: 'reference' must be an object with 'model' and/or 'answer'")
    model = model_from_record(ref["model"], f"{where}reference.model") if "model" in ref else None
    init = model_from_record(rec["initial_model"], f"{where}initial_model") if "initial_model" in rec else None
    answer = ref.get("answer")
    if answer is not None:
        answer = str(answer)
    try:
        return TaskRecord(str(rec["id"]), rec["kind"], rec.get("prompt", ""), model, answer, init)
    except ValueError as exc:
        raise ParseError(f"{where}: {exc}") from None


def read_task(path) -> TaskRecord:
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise LoadError(f"cannot read task {path}: {exc}") from None
    return task_from_record(load_record(text), f"{path}: ")


def write_task(task: TaskRecord, path):
    Path(path).write_text(json.dumps(task.to_record(), indent=1, ensure_ascii=False) + "\n", encoding="utf-8")


def load_tasks(root) -> list:
    """All tasks under ``root/<kind>/*.json``, sorted by path."""
    root = Path(root)
    if not root.is_dir():
        raise LoadError(f"task directory {root} does not exist")
    return [read_task(p) for p in sorted(root.glob("*/*.json"))]


# -- curriculum --------------------------------------------------------------

@dataclass(frozen=True)
class StageConfig:
    stage: int = 1
    threshold: int = STAGE_THRESHOLD

    def __post_init__(self):
        if self.stage not in (1, 2):
            raise ConfigError(f"stage must be 1 or 2, got {self.stage}")
        if self.threshold < 1:
            raise ConfigError("stage threshold must be >= 1")


def stage_filter(tasks, stage: StageConfig) -> list:
    """Stage 1 keeps small systems (at most ``threshold`` blocks), stage 2 the rest."""
    if stage.stage == 1:
        return [t for t in tasks if t.block_count <= stage.threshold]
    return [t for t in tasks if t.block_count > stage.threshold]
