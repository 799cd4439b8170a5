"""Shared test utilities."""
from blockagent.agent import EpisodeConfig, ReplayPolicy, Session, replay_builder, run_episode
from blockagent.fixtures import episode_record, fixture_model
from blockagent.ir import SystemModel


def replay_episode(name, catalog, config=None):
    """(episode record, EpisodeResult) for a bundled scripted episode."""
    rec = episode_record(name)
    start = fixture_model(rec["initial_model"]) if rec["initial_model"] else SystemModel({}, [])
    builder = replay_builder(rec["plan_outputs"]) if rec["plan_outputs"] else None
    session = Session(start, catalog, builder=builder)
    res = run_episode(ReplayPolicy(rec["turns"]), session, rec["task"], config=config or EpisodeConfig())
    return rec, res
