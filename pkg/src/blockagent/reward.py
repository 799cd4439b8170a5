"""Scalar rewards for QA and model-generation episodes.

Each component lies in [0, 1]; the total is their weighted mean, so its
analytic bounds are exactly 0 and 1 (no per-batch min/max is needed).
"""
from __future__ import annotations

import math
import re
from dataclasses import asdict, dataclass, fields
from typing import Optional

from .agent.protocol import MODEL, Answer, Transcript, parse_action
from .catalog import Catalog
from .compare import CompareWeights, similarity
from .errors import ConfigError, ProtocolError
from .ir import SystemModel
from .validator import is_executable

TASK_KINDS = ("QA", "Create", "Modify", "Reconstruct")
COMPONENTS = ("answer", "format", "structure", "executable", "tool_use")
NUMERIC_REL_TOL = 1e-6

_NUMBER = re.compile(r"[+-]?(\d+(\.\d*)?|\.\d+)([eE][+-]?\d+)?")


@dataclass(frozen=True)
class RewardComponents:
    answer: float = 0.0
    format: float = 0.0
    structure: float = 0.0
    executable: float = 0.0
    tool_use: float = 0.0

    def __post_init__(self):
        for f in fields(self):
            v = getattr(self, f.name)
            if not (isinstance(v, (int, float)) and 0.0 <= v <= 1.0):
                raise ValueError(f"reward component {f.name} must lie in [0, 1], got {v!r}")
        if self.executable not in (0, 1):
            raise ValueError("executable must be 0 or 1")


DEFAULT_WEIGHTS = {
    "QA": {"answer": 0.8, "format": 0.2},
    "Create": {"structure": 0.5, "executable": 0.3, "format": 0.1, "tool_use": 0.1},
    "Modify": {"structure": 0.5, "executable": 0.3, "format": 0.1, "tool_use": 0.1},
    # structure carries the reconstruct fidelity
    "Reconstruct": {"structure": 0.7, "executable": 0.3},
}


@dataclass(frozen=True)
class RewardConfig:
    kind: str = "QA"
    answer: float = 0.0
    format: float = 0.0
    structure: float = 0.0
    executable: float = 0.0
    tool_use: float = 0.0

    @classmethod
    def for_kind(cls, kind: str, **overrides) -> "RewardConfig":
        if kind not in DEFAULT_WEIGHTS:
            raise ConfigError(f"unknown task kind {kind!r}; expected one of {TASK_KINDS}")
        w = dict(DEFAULT_WEIGHTS[kind])
        bad = set(overrides) - set(COMPONENTS)
        if bad:
            raise ConfigError(f"unknown reward components {sorted(bad)}")
        w.update(overrides)
        return cls(kind, **w)

    def weights(self) -> dict:
        return {c: getattr(self, c) for c in COMPONENTS}

    def validate(self):
        if self.kind not in TASK_KINDS:
            raise ConfigError(f"unknown task kind {self.kind!r}")
        w = self.weights()
        for c, v in w.items():
            if not isinstance(v, (int, float)) or not math.isfinite(v) or v < 0:
                raise ConfigError(f"weight {c} must be a non-negative number, got {v!r}")
        if sum(w.values()) <= 0:
            raise ConfigError("reward weights are all zero")
        if self.kind == "QA" and (w["structure"] or w["executable"]):
            raise ConfigError("QA tasks take no structure or executable weight")


def _normalize(text: str) -> str:
    return " ".join(text.strip().lower().split())


def answer_reward(answer: Optional[str], reference: str) -> float:
    """1 for a normalized-string match or a number within 1e-6 relative tolerance."""
    if answer is None:
        return 0.0
    a, r = _normalize(answer), _normalize(reference)
    if a == r:
        return 1.0
    if _NUMBER.fullmatch(a) and _NUMBER.fullmatch(r):
        x, y = float(a), float(r)
        if math.isclose(x, y, rel_tol=NUMERIC_REL_TOL, abs_tol=0.0) or x == y:
            return 1.0
    return 0.0


def format_reward(transcript: Transcript) -> float:
    """1 when every model turn parses and exactly one final answer closes the episode.

    ``Continue`` replies are plan decisions, not final answers.
    """
    turns = [s.text for s in transcript.segments if s.origin == MODEL]
    if not turns:
        return 0.0
    finals = []
    for i, t in enumerate(turns):
        try:
            a = parse_action(t)
        except ProtocolError:
            return 0.0
        if isinstance(a, Answer) and a.decision != "continue":
            finals.append(i)
    if finals != [len(turns) - 1]:
        return 0.0
    return 1.0 if transcript.segments[-1].origin == MODEL else 0.0


def total_reward(components: RewardComponents, config: RewardConfig) -> float:
    """Weighted mean of the components."""
    config.validate()
    w = config.weights()
    num = sum(w[c] * getattr(components, c) for c in COMPONENTS)
    value = num / sum(w.values())
    return min(1.0, max(0.0, value))


def structure_score(model: SystemModel, reference: SystemModel, catalog: Optional[Catalog] = None,
                    weights: Optional[CompareWeights] = None) -> float:
    return similarity(model, reference, catalog, weights).total


def executable_score(model: SystemModel, catalog: Catalog) -> int:
    """1 when the model is nonempty and has no Error diagnostics."""
    return int(len(model.blocks) > 0 and is_executable(model, catalog))


def reconstruct_score(original: SystemModel, rebuilt: SystemModel, catalog: Catalog,
                      weights: Optional[CompareWeights] = None, max_blocks: int = 8):
    """(structural fidelity of the rebuild, whether the rebuild validates)."""
    fidelity = similarity(rebuilt, original, catalog, weights, max_blocks=max_blocks).total
    return fidelity, bool(executable_score(rebuilt, catalog))


def components_to_record(c: RewardComponents) -> dict:
    return asdict(c)


def score_episode(result, kind: str, reference, catalog: Catalog,
                  config: Optional[RewardConfig] = None, compare_weights: Optional[CompareWeights] = None):
    """(total, components) for a finished episode.

    ``reference`` is the expected answer text for QA and the reference model
    otherwise. ``result`` needs ``transcript``, ``answer``, ``final_model`` and
    ``tool_use`` (as on an episode result).
    """
    config = config or RewardConfig.for_kind(kind)
    fmt = format_reward(result.transcript)
    if kind == "QA":
        comps = RewardComponents(answer=answer_reward(result.answer, reference), format=fmt,
                                 tool_use=result.tool_use)
    else:
        model = result.final_model
        comps = RewardComponents(
            format=fmt,
            structure=structure_score(model, reference, catalog, compare_weights),
            executable=executable_score(model, catalog),
            tool_use=result.tool_use,
        )
    return total_reward(comps, config), comps
