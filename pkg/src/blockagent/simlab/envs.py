"""Synthetic environments for desk-scale GRPO / ReGRPO runs.

``EditQuestEnv`` asks the policy to rebuild a hidden target model one block
at a time; the reward is the Create-task reward against the target. Its
scripted reflector turns the first validator diagnostic of a failed
candidate into a hint that also states which ports and parameters one
wrong block must offer. The policy reads a hint as a logit bias toward the
block types consistent with it.

``CompositionalQAEnv`` asks for a short digit sequence; hints say whether
a wrong digit should be odd or even and whether it should be larger or
smaller.
"""
from __future__ import annotations

import json
import re
from dataclasses import dataclass
from typing import Optional

import numpy as np

from ..agent.edits import SUCCESS
from ..agent.protocol import MODEL, Segment, Transcript
from ..catalog import Catalog
from ..compare import similarity
from ..errors import EnvError
from ..ir import SystemModel, canonicalize, render_port_id
from ..reward import RewardComponents, RewardConfig, answer_reward, executable_score, format_reward, total_reward
from ..textio import emit_model_text, model_from_record, model_to_record
from ..validator import validate
from .policy import Decision

SKIP = "<skip>"
FINISH_TURN = "<answer>Finish</answer>"


@dataclass
class SimRollout:
    transcript: Transcript
    tokens: np.ndarray
    decisions: tuple
    actions: tuple
    model: Optional[SystemModel] = None
    answer: Optional[str] = None


def _assemble(turns):
    """Build transcript, token array and decisions from (origin, text, decision-or-None) triples."""
    segs, decisions, pos = [], [], 0
    for origin, text, dec in turns:
        seg = Segment(origin, text) if origin == MODEL else Segment.tool(text)
        segs.append(seg)
        for off, (state, action, bias) in enumerate(dec or ()):
            decisions.append(Decision(pos + off, state, action, bias))
        pos += seg.tokens
    tokens = np.full(pos, -1, dtype=np.int64)
    for d in decisions:
        tokens[d.position] = d.action
    return Transcript(tuple(segs)), tokens, tuple(decisions)


def _port_tokens(bdef) -> set:
    out = set()
    for s in bdef.ports:
        out.add(s.token)
        if s.alias:
            out.add(s.alias)
    return out


class EditQuestEnv:
    kind = "Create"

    def __init__(self, target: SystemModel, catalog: Catalog, name: str = "target",
                 distractors=("Gain", "Constant"), hint_strength: float = 2.5):
        target = canonicalize(target)
        if not target.blocks:
            raise EnvError("edit-quest target has no blocks")
        errors = [d for d in validate(target, catalog) if d.severity == "Error"]
        if errors:
            raise EnvError(f"edit-quest target must validate cleanly; first problem: {errors[0]}")
        self.target = target
        self.catalog = catalog
        self.name = name
        self.slots = list(target.blocks)
        types = sorted({b.type_name for b in target.blocks.values()} | {t for t in distractors if t in catalog})
        self.actions = types + [SKIP]
        self.hint_strength = float(hint_strength)
        self.config = RewardConfig.for_kind("Create")
        self._ref_text = emit_model_text(target)
        self._cache = {}
        self._episodes = {}  # actions -> (transcript parts, model)
        self._needs = {}
        for slot in self.slots:
            ports = set()
            for c in target.connections:
                for ref in (c.src, c.dst):
                    if ref.block == slot:
                        ports.add(render_port_id(ref.port))
            self._needs[slot] = (sorted(ports), sorted(target.blocks[slot].params))

    # states are slot indices
    @property
    def n_states(self) -> int:
        return len(self.slots)

    @property
    def n_actions(self) -> int:
        return len(self.actions)

    def questions(self):
        return [self.name]

    def reference(self, question) -> str:
        return self._ref_text

    # -- episodes ------------------------------------------------------------

    def build(self, actions) -> SystemModel:
        rec = {"Blocks": {}, "Connections": []}
        target = model_to_record(self.target)
        for slot, a in zip(self.slots, actions):
            t = self.actions[a]
            if t == SKIP:
                continue
            want = target["Blocks"][slot]
            rec["Blocks"][slot] = dict(want) if want["Type"] == t else {"Type": t}
        rec["Connections"] = list(target.get("Connections", []))
        return model_from_record(rec)

    def _turn_texts(self, actions):
        target = model_to_record(self.target)
        turns = []
        for slot, a in zip(self.slots, actions):
            t = self.actions[a]
            if t == SKIP:
                body = f"<think>Leave {slot} out for now.</think><answer>continue</answer>"
                turns.append((MODEL, body, "skip"))
                continue
            want = target["Blocks"][slot]
            blk = dict(want) if want["Type"] == t else {"Type": t}
            code = f'sys_dict["Blocks"][{json.dumps(slot)}] = {json.dumps(blk)}'
            turns.append((MODEL, f"<python>{code}</python>", "edit"))
        wiring = "\n".join(f'sys_dict["Connections"].append({json.dumps(c)})' for c in target.get("Connections", []))
        return turns, wiring

    def rollout(self, policy, question, reflection: str, rng: np.random.Generator) -> SimRollout:
        bias = self.hint_bias(reflection) if reflection else {}
        actions, decs = [], []
        for k in range(len(self.slots)):
            b = bias.get(k, ())
            a = policy.sample(k, rng, b)
            actions.append(a)
            decs.append((k, a, b))
        key = tuple(actions)
        if key not in self._episodes:
            texts, wiring = self._turn_texts(actions)
            turns = []
            for (origin, text, what), (k, a, _) in zip(texts, decs):
                # a skip is a plan decision and gets no tool result; the
                # decision token holds the policy's choice either way
                turns.append((origin, text, [(k, a, ())]))
                if what == "edit":
                    turns.append(("tool", SUCCESS, None))
            turns.append((MODEL, f"<python>\n{wiring}\n</python>", None))
            turns.append(("tool", SUCCESS, None))
            turns.append((MODEL, FINISH_TURN, None))
            self._episodes[key] = (_assemble(turns), self.build(actions))
        (transcript, tokens, plain), model = self._episodes[key]
        decisions = tuple(Decision(d.position, d.state, d.action, b) for d, (_, _, b) in zip(plain, decs))
        return SimRollout(transcript, tokens, decisions, key, model)

    def _components(self, ro: SimRollout) -> RewardComponents:
        return RewardComponents(
            format=format_reward(ro.transcript),
            structure=similarity(ro.model, self.target, self.catalog).total,
            executable=executable_score(ro.model, self.catalog),
            tool_use=1.0,
        )

    def reward(self, question, ro: SimRollout) -> float:
        key = ro.actions
        if key not in self._cache:
            self._cache[key] = total_reward(self._components(ro), self.config)
        return self._cache[key]

    # -- reflections ---------------------------------------------------------

    def _wrong_slots(self, actions):
        return [s for s, a in zip(self.slots, actions) if self.actions[a] != self.target.blocks[s].type_name]

    def reflect(self, question, ro: SimRollout) -> str:
        """First validator diagnostic plus the requirements of one wrong block."""
        diags = sorted(validate(ro.model, self.catalog), key=lambda d: d.sort_key())
        wrong = self._wrong_slots(ro.actions)
        if not diags and not wrong:
            return "None"
        parts = []
        slot = wrong[0] if wrong else None
        if diags:
            d = diags[0]
            parts.append(f"{d.code} at {d.subject}: {d.message}.")
            named = [s for s in wrong if d.subject == s or d.subject.startswith(s + "/") or d.subject.startswith(s + ".")]
            if named:
                slot = named[0]
        if slot is not None:
            ports, params = self._needs[slot]
            parts.append(f"Block '{slot}' should expose ports {', '.join(ports) or 'none'}; "
                         f"parameters {', '.join(params) or 'none'}.")
        return " ".join(parts)

    _REQ = re.compile(r"Block '([^']+)' should expose ports ([^;]*); parameters ([^.]*)\.")

    def hint_bias(self, hint: str) -> dict:
        """slot index -> per-action logit offsets implied by a hint."""
        out = {}
        for m in self._REQ.finditer(hint or ""):
            slot = m.group(1)
            if slot not in self.slots:
                continue
            ports = {p.strip() for p in m.group(2).split(",") if p.strip() and p.strip() != "none"}
            params = {p.strip() for p in m.group(3).split(",") if p.strip() and p.strip() != "none"}
            b = np.zeros(self.n_actions)
            for i, t in enumerate(self.actions):
                if t == SKIP:
                    continue
                d = self.catalog.get(t)
                if ports <= _port_tokens(d) and params <= {p.name for p in d.params}:
                    b[i] = self.hint_strength
            out[self.slots.index(slot)] = tuple(b)
        return out


def make_edit_env(target: SystemModel, catalog: Catalog, **kw) -> EditQuestEnv:
    return EditQuestEnv(target, catalog, **kw)


class CompositionalQAEnv:
    """Questions whose answers are digit sequences like ``"3 1 4"``."""

    kind = "QA"

    def __init__(self, answers: dict, hint_strength: float = 2.0):
        if not answers:
            raise EnvError("compositional QA needs at least one question")
        self.answers = {q: tuple(int(c) for c in a) for q, a in answers.items()}
        if any(len(a) < 3 for a in self.answers.values()):
            raise EnvError("answers need at least three digits")
        self.qids = sorted(self.answers)
        self.offsets = {}
        n = 0
        for q in self.qids:
            self.offsets[q] = n
            n += len(self.answers[q])
        self._n_states = n
        self.hint_strength = float(hint_strength)
        self.config = RewardConfig.for_kind("QA")

    @classmethod
    def random(cls, rng: np.random.Generator, n_questions: int = 3, length: int = 3, **kw):
        return cls({f"q{i}": "".join(str(int(d)) for d in rng.integers(0, 10, size=length))
                    for i in range(n_questions)}, **kw)

    @property
    def n_states(self) -> int:
        return self._n_states

    n_actions = 10

    def questions(self):
        return list(self.qids)

    def reference(self, question) -> str:
        return " ".join(map(str, self.answers[question]))

    def rollout(self, policy, question, reflection: str, rng: np.random.Generator) -> SimRollout:
        bias = self.hint_bias(question, reflection) if reflection else {}
        acts, decs = [], []
        base = self.offsets[question]
        for k in range(len(self.answers[question])):
            b = bias.get(k, ())
            a = policy.sample(base + k, rng, b)
            acts.append(a)
            decs.append((base + k, a, b))
        answer = " ".join(map(str, acts))
        transcript, tokens, decisions = _assemble([(MODEL, f"<answer>{answer}</answer>", decs)])
        return SimRollout(transcript, tokens, decisions, tuple(acts), answer=answer)

    def reward(self, question, ro: SimRollout) -> float:
        comps = RewardComponents(answer=answer_reward(ro.answer, self.reference(question)),
                                 format=format_reward(ro.transcript), tool_use=1.0)
        return total_reward(comps, self.config)

    def reflect(self, question, ro: SimRollout) -> str:
        want = self.answers[question]
        for k, (a, w) in enumerate(zip(ro.actions, want)):
            if a != w:
                parity = "an even" if w % 2 == 0 else "an odd"
                side = "larger" if w > a else "smaller"
                return f"Position {k + 1} needs {parity} digit, {side} than the one given."
        return "None"

    _HINT = re.compile(r"Position (\d+) needs an? (even|odd) digit, (larger|smaller) than the one given\.")

    def hint_bias(self, question, hint: str) -> dict:
        out = {}
        for m in self._HINT.finditer(hint or ""):
            k = int(m.group(1)) - 1
            if not 0 <= k < len(self.answers[question]):
                continue
            parity = 0 if m.group(2) == "even" else 1
            b = np.array([self.hint_strength if d % 2 == parity else 0.0 for d in range(10)])
            out[k] = tuple(b)
        return out
