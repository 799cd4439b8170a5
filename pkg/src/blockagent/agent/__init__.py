"""Plan-execute agent protocol: turn grammar, edit scripts, sessions."""
from .edits import SUCCESS, apply_edit_script, run_edit_script
from .protocol import (
    Answer,
    EditScript,
    Segment,
    ToolCall,
    Transcript,
    build_mask,
    parse_action,
    render,
)
from .session import (
    EpisodeConfig,
    EpisodeResult,
    PlanState,
    ReplayPolicy,
    Session,
    ToolRegistry,
    default_registry,
    dispatch,
    replan_step,
    replay_builder,
    run_episode,
    submodel_text,
    write_episode_log,
)

__all__ = [
    "SUCCESS", "apply_edit_script", "run_edit_script",
    "Answer", "EditScript", "Segment", "ToolCall", "Transcript", "build_mask", "parse_action", "render",
    "EpisodeConfig", "EpisodeResult", "PlanState", "ReplayPolicy", "Session", "ToolRegistry",
    "default_registry", "dispatch", "replan_step", "replay_builder", "run_episode",
    "submodel_text", "write_episode_log",
]
