"""Group-relative policy optimization with tool-token masking and reflections.

One iteration per question: ``G1`` plain rollouts, reflections written for
the failed ones, then ``G2`` rollouts conditioned on a reflection drawn with
a decaying probability. Advantages are computed over all ``G1 + G2``
rewards as one group, and the policy takes ``mu`` ascent steps on the
clipped, masked surrogate minus a KL penalty toward the reference policy.

The KL term uses the non-negative token estimator
``exp(d) - d - 1`` with ``d = logp_ref - logp_new``.
"""
from __future__ import annotations

import json
import math
import re
from dataclasses import asdict, dataclass, field, replace
from typing import Optional, Protocol, Sequence

import numpy as np

from .agent.protocol import Transcript, build_mask
from .errors import ConfigError, DegenerateTrajectory

ADV_STD, ADV_MEAN = "std", "mean"
SCHEDULES = ("linear", "exponential", "non-replacement")
NO_REFLECTION = "None"


# -- configuration -----------------------------------------------------------

@dataclass(frozen=True)
class Schedule:
    kind: str = "linear"
    p0: float = 1.0
    horizon: int = 20
    rate: float = 0.9

    def __post_init__(self):
        if self.kind not in SCHEDULES:
            raise ConfigError(f"schedule kind must be one of {SCHEDULES}, got {self.kind!r}")
        if not 0.0 <= self.p0 <= 1.0:
            raise ConfigError(f"schedule p0 must lie in [0, 1], got {self.p0}")
        if self.horizon < 1:
            raise ConfigError("schedule horizon must be >= 1")
        if not 0.0 <= self.rate <= 1.0:
            raise ConfigError("schedule rate must lie in [0, 1]")


@dataclass(frozen=True)
class RegrpoConfig:
    G: int = 8
    G1: int = 4
    G2: int = 4
    clip_eps: float = 0.2
    beta: float = 0.04
    mu: int = 1
    adv_mode: str = ADV_STD
    adv_eps: float = 1e-8
    schedule: Schedule = field(default_factory=Schedule)
    max_reflection_words: int = 150
    fail_threshold: float = 0.8
    fail_threshold_qa: float = 0.999
    step_size: float = 1.0

    def __post_init__(self):
        if self.G1 < 1 or self.G2 < 1:
            raise ConfigError("G1 and G2 must both be >= 1")
        if self.G1 + self.G2 != self.G:
            raise ConfigError(f"G1 + G2 must equal G ({self.G1} + {self.G2} != {self.G})")
        if not 0.0 < self.clip_eps < 1.0:
            raise ConfigError(f"clip_eps must lie in (0, 1), got {self.clip_eps}")
        if self.beta < 0:
            raise ConfigError("beta must be >= 0")
        if self.mu < 1:
            raise ConfigError("mu must be >= 1")
        if self.adv_mode not in (ADV_STD, ADV_MEAN):
            raise ConfigError(f"adv_mode must be 'std' or 'mean', got {self.adv_mode!r}")
        if self.max_reflection_words < 1:
            raise ConfigError("max_reflection_words must be >= 1")

    def failed(self, reward: float, kind: str) -> bool:
        """Whether a rollout falls short and should get a reflection."""
        return reward < (self.fail_threshold_qa if kind == "QA" else self.fail_threshold)


# -- advantages and objective ------------------------------------------------

def group_advantages(rewards, mode: str = ADV_STD, eps: float = 1e-8) -> np.ndarray:
    r = np.asarray(rewards, dtype=float)
    if r.ndim != 1 or len(r) < 2:
        raise ConfigError("a group needs at least two rewards")
    a = r - r.mean()
    if mode == ADV_STD:
        return a / (r.std() + eps)
    if mode == ADV_MEAN:
        return a
    raise ConfigError(f"unknown advantage mode {mode!r}")


@dataclass
class TrajectoryRecord:
    question: str
    tokens: np.ndarray
    mask: np.ndarray
    reward: float
    subgroup: int = 1
    reflection: str = ""
    tool_calls: int = 0
    rollout: object = None  # policy-specific replay data

    def __post_init__(self):
        self.tokens = np.asarray(self.tokens)
        self.mask = np.asarray(self.mask, dtype=np.int8)
        if self.tokens.shape != self.mask.shape:
            raise ValueError(f"mask length {len(self.mask)} != token count {len(self.tokens)}")
        if self.subgroup not in (1, 2):
            raise ValueError("subgroup must be 1 or 2")
        if self.subgroup == 1 and self.reflection:
            raise ValueError("subgroup-1 trajectories carry no reflection")


@dataclass
class PolicyEval:
    new: np.ndarray
    old: np.ndarray
    ref: np.ndarray

    def __post_init__(self):
        self.new, self.old, self.ref = (np.asarray(v, dtype=float) for v in (self.new, self.old, self.ref))
        if not (self.new.shape == self.old.shape == self.ref.shape):
            raise ValueError("new, old and ref log-probabilities must have equal length")


def kl_estimate(logp_new, logp_ref) -> np.ndarray:
    d = np.asarray(logp_ref, dtype=float) - np.asarray(logp_new, dtype=float)
    # expm1(d) >= d analytically; the max only absorbs sub-ulp rounding
    return np.maximum(np.expm1(d) - d, 0.0)


def _masked(traj: TrajectoryRecord, ev: PolicyEval):
    if len(ev.new) != len(traj.mask):
        raise ValueError("log-probability vectors do not match the trajectory length")
    idx = np.flatnonzero(traj.mask)
    if len(idx) == 0:
        raise DegenerateTrajectory(f"trajectory for {traj.question!r} has no model tokens")
    return idx, ev.new[idx], ev.old[idx], ev.ref[idx]


def masked_objective(traj: TrajectoryRecord, ev: PolicyEval, advantage: float, cfg: RegrpoConfig):
    """(objective, per-token terms). Terms are zero at tool positions.

    Only masked-in positions are read, so tool-token log-probs cannot
    influence the value.
    """
    idx, new, old, ref = _masked(traj, ev)
    rho = np.exp(new - old)
    clipped = np.clip(rho, 1.0 - cfg.clip_eps, 1.0 + cfg.clip_eps)
    surrogate = np.minimum(rho * advantage, clipped * advantage)
    t = surrogate - cfg.beta * kl_estimate(new, ref)
    terms = np.zeros(len(traj.mask))
    terms[idx] = t
    return float(t.sum() / len(idx)), terms


def objective_token_grads(traj: TrajectoryRecord, ev: PolicyEval, advantage: float, cfg: RegrpoConfig) -> np.ndarray:
    """d objective / d logp_new per token (zero at tool positions)."""
    idx, new, old, ref = _masked(traj, ev)
    rho = np.exp(new - old)
    clipped = np.clip(rho, 1.0 - cfg.clip_eps, 1.0 + cfg.clip_eps)
    # the unclipped branch is active when it is the smaller one; inside the
    # clip range both branches coincide and the slope is rho * A
    active = rho * advantage <= clipped * advantage
    g_sur = np.where(active, rho * advantage, 0.0)
    g_kl = 1.0 - np.exp(ref - new)  # d kl / d logp_new
    g = np.zeros(len(traj.mask))
    g[idx] = (g_sur - cfg.beta * g_kl) / len(idx)
    return g


# -- reflections -------------------------------------------------------------

def schedule_p(iteration: int, schedule: Schedule, unused: bool = True) -> float:
    """Reflection probability at ``iteration`` (1-based).

    For non-replacement sampling ``unused`` says whether the buffer still
    has entries that were not handed out.
    """
    if iteration < 1:
        raise ConfigError("iterations are counted from 1")
    if schedule.kind == "linear":
        p = schedule.p0 * (1.0 - (iteration - 1) / schedule.horizon)
    elif schedule.kind == "exponential":
        p = schedule.p0 * schedule.rate ** (iteration - 1)
    else:
        p = schedule.p0 if unused else 0.0
    return float(min(1.0, max(0.0, p)))


@dataclass
class ReflectionBuffer:
    texts: list = field(default_factory=list)
    used: set = field(default_factory=set)

    def __len__(self):
        return len(self.texts)

    def add(self, text: str):
        if text and text not in self.texts:
            self.texts.append(text)

    @property
    def has_unused(self) -> bool:
        return len(self.used) < len(self.texts)


def select_reflection(buffer: ReflectionBuffer, p: float, rng: np.random.Generator,
                      non_replacement: bool = False) -> str:
    if not 0.0 <= p <= 1.0:
        raise ValueError(f"p must lie in [0, 1], got {p}")
    if not buffer.texts:
        return ""
    pool = [i for i in range(len(buffer.texts)) if not (non_replacement and i in buffer.used)]
    if not pool:
        return ""
    if rng.random() >= p:
        return ""
    i = pool[int(rng.integers(len(pool)))]
    buffer.used.add(i)
    return buffer.texts[i]


_WORD = re.compile(r"\w+")


def _words(text: str) -> list:
    return _WORD.findall(text.lower())


def _ngrams(seq, n) -> set:
    return {tuple(seq[i:i + n]) for i in range(len(seq) - n + 1)}


@dataclass(frozen=True)
class ReflectionVerdict:
    status: str  # "accepted", "rejected" or "none"
    text: str = ""
    reason: str = ""

    @property
    def accepted(self) -> bool:
        return self.status == "accepted"


def filter_reflection(text: str, reference_answer: str, max_words: int = 150) -> ReflectionVerdict:
    """Reject reflections that leak the reference answer or run too long."""
    stripped = (text or "").strip()
    if not stripped or stripped == NO_REFLECTION:
        return ReflectionVerdict("none")
    words = _words(stripped)
    if len(stripped.split()) > max_words:
        return ReflectionVerdict("rejected", reason=f"longer than {max_words} words")
    ans = _words(reference_answer or "")
    if ans:
        if len(ans) >= 4 and _ngrams(ans, 4) & _ngrams(words, 4):
            return ReflectionVerdict("rejected", reason="shares a 4-gram with the reference answer")
        k = max(1, math.ceil(0.6 * len(ans)))
        if k <= len(words) and _ngrams(ans, k) & _ngrams(words, k):
            return ReflectionVerdict("rejected", reason="repeats most of the reference answer")
    return ReflectionVerdict("accepted", stripped)


# -- iteration ---------------------------------------------------------------

class Rollout(Protocol):
    transcript: Transcript
    tokens: np.ndarray


class PolicyLike(Protocol):
    def logprobs(self, rollout) -> np.ndarray: ...
    def snapshot(self) -> "PolicyLike": ...
    def ascend(self, rollouts: Sequence, token_grads: Sequence, step_size: float) -> None: ...


class EnvLike(Protocol):
    kind: str
    def rollout(self, policy, question, reflection: str, rng: np.random.Generator): ...
    def reward(self, question, rollout) -> float: ...
    def reflect(self, question, rollout) -> str: ...
    def reference(self, question) -> str: ...


@dataclass
class IterationReport:
    iteration: int
    p: float
    rewards: list
    subgroups: list
    reflections: int
    tool_calls: int
    buffer_size: int
    objectives: list

    @property
    def mean_reward(self) -> float:
        return float(np.mean(self.rewards)) if self.rewards else 0.0

    def to_record(self) -> dict:
        rec = asdict(self)
        rec["mean_reward"] = self.mean_reward
        return rec


def write_reports_jsonl(reports, path):
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for r in reports:
            fh.write(json.dumps(r.to_record(), sort_keys=True) + "\n")


@dataclass
class RegrpoState:
    """Per-run state carried across iterations."""

    reference: object  # frozen reference policy
    buffers: dict = field(default_factory=dict)
    iteration: int = 0


def _record(env, policy, question, reflection, subgroup, rng):
    ro = env.rollout(policy, question, reflection, rng)
    r = env.reward(question, ro)
    mask = build_mask(ro.transcript)
    return TrajectoryRecord(str(question), ro.tokens, mask, r, subgroup, reflection,
                            sum(1 for s in ro.transcript.segments if s.origin == "tool"), ro)


def regrpo_iteration(questions, policy, env, cfg: RegrpoConfig, state: RegrpoState,
                     rollout_rng: np.random.Generator, reflect_rng: np.random.Generator) -> IterationReport:
    """One pass of reflection-augmented GRPO over ``questions``.

    ``rollout_rng`` drives the policy samples only and ``reflect_rng`` only
    the reflection draws, so a zero reflection probability leaves the
    rollouts identical to plain GRPO given the same rollout seed.
    """
    state.iteration += 1
    it = state.iteration
    rewards, subgroups, objectives = [], [], []
    n_reflect = n_tools = 0
    nonrep = cfg.schedule.kind == "non-replacement"
    p_seen = 0.0
    for q in questions:
        buf = state.buffers.setdefault(str(q), ReflectionBuffer())
        old = policy.snapshot()
        group = [_record(env, policy, q, "", 1, rollout_rng) for _ in range(cfg.G1)]
        ref_answer = env.reference(q)
        for tr in group:
            if cfg.failed(tr.reward, env.kind):
                v = filter_reflection(env.reflect(q, tr.rollout), ref_answer, cfg.max_reflection_words)
                if v.accepted:
                    buf.add(v.text)
        p = schedule_p(it, cfg.schedule, buf.has_unused)
        p_seen = max(p_seen, p)
        for _ in range(cfg.G2):
            e = select_reflection(buf, p, reflect_rng, non_replacement=nonrep) if p > 0 else ""
            group.append(_record(env, policy, q, e, 2, rollout_rng))
            n_reflect += bool(e)
        adv = group_advantages([t.reward for t in group], cfg.adv_mode, cfg.adv_eps)
        old_lp = [old.logprobs(t.rollout) for t in group]
        ref_lp = [state.reference.logprobs(t.rollout) for t in group]
        for _ in range(cfg.mu):
            evals = [PolicyEval(policy.logprobs(t.rollout), o, r) for t, o, r in zip(group, old_lp, ref_lp)]
            objs = [masked_objective(t, ev, a, cfg)[0] for t, ev, a in zip(group, evals, adv)]
            objectives.append(float(np.mean(objs)))
            grads = [objective_token_grads(t, ev, a, cfg) / len(group) for t, ev, a in zip(group, evals, adv)]
            policy.ascend([t.rollout for t in group], grads, cfg.step_size)
        rewards += [float(t.reward) for t in group]
        subgroups += [t.subgroup for t in group]
        n_tools += sum(t.tool_calls for t in group)
    return IterationReport(it, p_seen, rewards, subgroups, n_reflect, n_tools,
                           sum(len(b) for b in state.buffers.values()), objectives)


def grpo_config(cfg: RegrpoConfig) -> RegrpoConfig:
    """The same configuration with reflections switched off (plain GRPO)."""
    return replace(cfg, schedule=replace(cfg.schedule, p0=0.0))
