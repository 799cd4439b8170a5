"""Plan-execute episode harness: tool registry, dispatch, replanning, replay."""
from __future__ import annotations

import json
from dataclasses import dataclass, field, replace
from typing import Callable, Optional

from ..catalog import Catalog, format_search_results
from ..errors import BlockAgentError, EnvError, ProtocolError
from ..ir import SystemModel
from .edits import run_edit_script
from .protocol import MODEL, Answer, EditScript, Segment, ToolCall, Transcript, parse_action

ACTIVE, FINISHED = "Active", "Finished"

# harness text shown to the policy; it is context, not part of the transcript
TOOL_PROMPT = (
    "Reason inside <think>...</think>, then take exactly one action: a tool call as "
    '<tool>{"name": ..., "args": {...}}</tool>, an edit of sys_dict inside <python>...</python>, '
    "or a final reply inside <answer>...</answer>. Tool output comes back inside <result> tags.\n"
    "Tools:\n{tool_descriptions}"
)
REPLAN_PROMPT = (
    "Choose the next step: revise the plan with a plan tool call, reply <answer>Continue</answer> "
    "to run the next plan step, or <answer>Finish</answer> once the whole task is done."
)

FINISHED_OUTCOME = "Finished"
ANSWERED = "Answered"
# both budgets end a runaway episode with the same outcome; ``limit`` says which
CONTEXT_EXCEEDED = "ContextExceeded"


@dataclass(frozen=True)
class PlanState:
    plan: tuple = ()
    cursor: int = 0
    status: str = ACTIVE

    def __post_init__(self):
        if not 0 <= self.cursor <= len(self.plan):
            raise ValueError(f"plan cursor {self.cursor} outside 0..{len(self.plan)}")
        if self.status not in (ACTIVE, FINISHED):
            raise ValueError(f"bad plan status {self.status!r}")

    @property
    def current(self) -> Optional[str]:
        return self.plan[self.cursor] if self.cursor < len(self.plan) else None


def _plan_list(args) -> tuple:
    steps = args.get("plan_list")
    if not isinstance(steps, list) or not all(isinstance(s, str) for s in steps):
        raise ProtocolError("plan needs 'plan_list', a list of step descriptions")
    return tuple(steps)


def replan_step(state: PlanState, decision) -> PlanState:
    """Advance the plan on Continue, close it on Finish, replace it on a plan call."""
    if isinstance(decision, ToolCall) and decision.name == "plan":
        return PlanState(_plan_list(decision.args), 0, ACTIVE)
    if isinstance(decision, Answer) and decision.decision is not None:
        if state.status == FINISHED:
            raise ProtocolError("the plan is already finished")
        if decision.decision == "finish":
            return replace(state, status=FINISHED)
        if state.cursor >= len(state.plan):
            raise ProtocolError("no plan step left to continue with")
        return replace(state, cursor=state.cursor + 1)
    raise ProtocolError(f"not a replanning decision: {decision!r}")


# -- tools -------------------------------------------------------------------

PlanBuilder = Callable[[str, int, "Session"], str]


@dataclass
class Session:
    """Mutable per-episode state: the working model and the plan."""

    model: SystemModel
    catalog: Catalog
    plan: PlanState = field(default_factory=PlanState)
    builder: Optional[PlanBuilder] = None
    calls: list = field(default_factory=list)  # (tool name, ok)

    def run_plan_step(self) -> str:
        step = self.plan.current
        if step is None:
            return f"All {len(self.plan.plan)} plan steps have been executed."
        if self.builder is None:
            return f"Step {self.plan.cursor + 1} of {len(self.plan.plan)}: {step}"
        return self.builder(step, self.plan.cursor, self)


@dataclass(frozen=True)
class Tool:
    name: str
    fn: Callable  # (session, args) -> result text; raise to report an error
    description: str


class ToolError(BlockAgentError):
    pass


def _search_tool(session: Session, args: dict) -> str:
    queries = args.get("query_list")
    if isinstance(queries, str):
        queries = [queries]
    if not isinstance(queries, list) or not queries or not all(isinstance(q, str) for q in queries):
        raise ToolError("search_blocks needs 'query_list', a non-empty list of strings")
    unknown = set(args) - {"query_list", "lib", "top_k"}
    if unknown:
        raise ToolError(f"search_blocks got unexpected arguments {sorted(unknown)}")
    lib = args.get("lib")
    top_k = args.get("top_k", 3)
    if lib is not None and not isinstance(lib, str):
        raise ToolError("'lib' must be a string")
    if not isinstance(top_k, int) or isinstance(top_k, bool) or top_k < 1:
        raise ToolError("'top_k' must be a positive integer")
    hits = session.catalog.search_blocks(queries, lib=lib, top_k=top_k)
    return format_search_results(queries, hits)


def _plan_tool(session: Session, args: dict) -> str:
    try:
        session.plan = replan_step(session.plan, ToolCall("plan", args))
    except ProtocolError as exc:
        raise ToolError(str(exc)) from None
    return session.run_plan_step()


def _python_tool(session: Session, args: dict) -> str:
    code = args.get("code")
    if not isinstance(code, str):
        raise ToolError("python needs 'code', the script text")
    model, text, ok = run_edit_script(session.model, code)
    session.model = model
    if not ok:
        raise ToolError(text)
    return text


class ToolRegistry:
    def __init__(self, tools=()):
        self._tools = {}
        for t in tools:
            self.register(t)

    def register(self, tool: Tool):
        self._tools[tool.name] = tool

    def get(self, name) -> Optional[Tool]:
        return self._tools.get(name)

    def __contains__(self, name):
        return name in self._tools

    @property
    def names(self) -> list:
        return sorted(self._tools)

    def describe(self) -> str:
        return "\n".join(f"- {t.name}: {t.description}" for _, t in sorted(self._tools.items()))


def default_registry() -> ToolRegistry:
    return ToolRegistry([
        Tool("search_blocks", _search_tool,
             'rank library blocks for each query; args {"query_list": [...], "lib": optional library}'),
        Tool("plan", _plan_tool, 'set the step plan; args {"plan_list": [...]}; runs the first step'),
        Tool("python", _python_tool, 'edit sys_dict; args {"code": script} (same as a <python> turn)'),
    ])


def dispatch(call: ToolCall, registry: ToolRegistry, session: Session) -> Segment:
    """Run one tool call; failures come back as result text, never as exceptions."""
    tool = registry.get(call.name)
    if tool is None:
        session.calls.append((call.name, False))
        return Segment.tool(f"Error: unknown tool {call.name!r}. Available tools: {', '.join(registry.names)}.")
    try:
        text = tool.fn(session, call.args)
        ok = True
    except ToolError as exc:
        text, ok = str(exc), False
        if not text.startswith("Python execution failed"):
            text = f"Error: {text}"
    except BlockAgentError as exc:
        text, ok = f"Error: {call.name} failed: {exc}", False
    session.calls.append((call.name, ok))
    return Segment.tool(text)


# -- episodes ----------------------------------------------------------------

@dataclass(frozen=True)
class EpisodeConfig:
    max_turns: int = 32
    max_tokens: int = 8192


@dataclass(frozen=True)
class EpisodeView:
    """What a policy sees before producing its next turn."""

    task: str
    transcript: Transcript
    model: SystemModel
    instructions: str
    turn: int


@dataclass
class EpisodeResult:
    transcript: Transcript
    outcome: str
    final_model: SystemModel
    answer: Optional[str]
    tool_calls: int
    tool_errors: int
    format_errors: int
    limit: Optional[str] = None  # "turns" or "tokens" when a budget ran out

    @property
    def tool_use(self) -> float:
        return 1.0 if self.tool_calls == 0 else (self.tool_calls - self.tool_errors) / self.tool_calls

    def to_record(self) -> dict:
        return {
            "outcome": self.outcome,
            "answer": self.answer,
            "tool_calls": self.tool_calls,
            "tool_errors": self.tool_errors,
            "format_errors": self.format_errors,
            "limit": self.limit,
            "tokens": self.transcript.total_tokens,
            "segments": self.transcript.to_records(),
        }


Policy = Callable[[EpisodeView], str]


def run_episode(policy: Policy, session: Session, task: str = "",
                registry: Optional[ToolRegistry] = None,
                config: Optional[EpisodeConfig] = None) -> EpisodeResult:
    """Alternate policy turns and tool results until an answer or a limit."""
    registry = registry or default_registry()
    config = config or EpisodeConfig()
    transcript = Transcript()
    answer, outcome, limit = None, CONTEXT_EXCEEDED, "turns"
    format_errors = 0
    base = TOOL_PROMPT.replace("{tool_descriptions}", registry.describe())
    for turn in range(config.max_turns):
        planning = bool(session.plan.plan) and session.plan.status == ACTIVE
        view = EpisodeView(task, transcript, session.model, base + ("\n" + REPLAN_PROMPT if planning else ""), turn)
        text = policy(view)
        transcript = transcript.append(Segment(MODEL, text))
        if transcript.total_tokens > config.max_tokens:
            limit = "tokens"
            break
        try:
            action = parse_action(text)
        except ProtocolError as exc:
            format_errors += 1
            seg = Segment.tool(f"Format error: {exc}")
        else:
            if isinstance(action, Answer):
                if action.decision == "continue":
                    try:
                        session.plan = replan_step(session.plan, action)
                        seg = Segment.tool(session.run_plan_step())
                    except (ProtocolError, BlockAgentError) as exc:
                        seg = Segment.tool(f"Error: {exc}")
                else:
                    if action.decision == "finish" and session.plan.plan and session.plan.status == ACTIVE:
                        session.plan = replan_step(session.plan, action)
                    answer = action.text
                    outcome = FINISHED_OUTCOME if action.decision == "finish" else ANSWERED
                    limit = None
                    break
            elif isinstance(action, EditScript):
                seg = dispatch(ToolCall("python", {"code": action.text}), registry, session)
            else:
                seg = dispatch(action, registry, session)
        transcript = transcript.append(seg)
        if transcript.total_tokens > config.max_tokens:
            limit = "tokens"
            break
    return EpisodeResult(
        transcript=transcript.with_answer(answer),
        outcome=outcome,
        final_model=session.model,
        answer=answer,
        tool_calls=len(session.calls),
        tool_errors=sum(1 for _, ok in session.calls if not ok),
        format_errors=format_errors,
        limit=limit,
    )


# -- scripted policies -------------------------------------------------------

class ReplayPolicy:
    """Returns recorded turns in order."""

    def __init__(self, turns):
        self.turns = list(turns)
        self.i = 0

    def __call__(self, view: EpisodeView) -> str:
        if self.i >= len(self.turns):
            raise EnvError(f"replay exhausted after {len(self.turns)} turns")
        t = self.turns[self.i]
        self.i += 1
        return t


def replay_builder(outputs) -> PlanBuilder:
    """Plan builder that hands back recorded step outputs in order."""
    queue = list(outputs)

    def build(step, index, session):
        if not queue:
            raise EnvError("no recorded output left for plan step")
        return queue.pop(0)

    return build


def submodel_text(model_text: str, index: int) -> str:
    """Result text for a plan step that produced a partial model."""
    return f"subsys_dict_{index + 1} = {model_text}"


def write_episode_log(result: EpisodeResult, path):
    """One JSON record per segment, then a summary record."""
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for rec in result.transcript.to_records():
            fh.write(json.dumps(rec, ensure_ascii=False) + "\n")
        summary = {k: v for k, v in result.to_record().items() if k != "segments"}
        fh.write(json.dumps({"summary": summary}, ensure_ascii=False) + "\n")
