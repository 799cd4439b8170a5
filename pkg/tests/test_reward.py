import pytest
from hypothesis import given
from hypothesis import strategies as st

from blockagent.agent import Segment, Transcript
from blockagent.errors import ConfigError
from blockagent.fixtures import fixture_model
from blockagent.ir import SystemModel
from blockagent.reward import (
    COMPONENTS,
    RewardComponents,
    RewardConfig,
    answer_reward,
    executable_score,
    format_reward,
    reconstruct_score,
    score_episode,
    total_reward,
)
from helpers import replay_episode

unit = st.floats(0.0, 1.0)


def transcript(*parts):
    return Transcript(tuple(Segment(o, t) for o, t in parts))


def test_answer_reward():
    assert answer_reward("12.0000001", "12") == 1.0
    assert answer_reward("12.1", "12") == 0.0
    assert answer_reward("  Resistor ", "resistor") == 1.0
    assert answer_reward("Capacitor", "Resistor") == 0.0
    assert answer_reward(None, "12") == 0.0
    assert answer_reward("0", "0.0") == 1.0


def test_format_reward_cases():
    good = transcript(("model", '<think>look</think><tool>{"name": "search_blocks", "args": {"query_list": ["Gain"]}}</tool>'),
                      ("tool", "<result>ok</result>"), ("model", "<answer>Finish</answer>"))
    assert format_reward(good) == 1.0
    # two action tags in one turn
    bad = transcript(("model", "<python>x</python><answer>Finish</answer>"))
    assert format_reward(bad) == 0.0
    assert format_reward(Transcript()) == 0.0
    # Continue is a plan decision, not the final answer
    assert format_reward(transcript(("model", "<answer>Continue</answer>"), ("tool", "<result>s</result>"))) == 0.0
    # an early final answer followed by more turns is malformed
    twice = transcript(("model", "<answer>8</answer>"), ("tool", "<result>x</result>"), ("model", "<answer>8</answer>"))
    assert format_reward(twice) == 0.0


def test_format_reward_on_recorded_episode(catalog):
    _, res = replay_episode("cooling_modify", catalog)
    assert format_reward(res.transcript) == 1.0


def test_total_arithmetic():
    c = RewardComponents(structure=0.9057, executable=1, format=1, tool_use=1)
    # 0.5 * 0.9057 + 0.3 + 0.1 + 0.1
    assert total_reward(c, RewardConfig.for_kind("Create")) == pytest.approx(0.95285, abs=1e-12)
    qa = RewardComponents(answer=1, format=0)
    assert total_reward(qa, RewardConfig.for_kind("QA")) == pytest.approx(0.8)


def test_config_errors():
    with pytest.raises(ConfigError):
        total_reward(RewardComponents(), RewardConfig("Create"))
    with pytest.raises(ConfigError):
        RewardConfig.for_kind("Essay")
    with pytest.raises(ConfigError):
        RewardConfig.for_kind("QA", style=1.0)
    with pytest.raises(ConfigError):
        RewardConfig.for_kind("QA", structure=0.5).validate()
    with pytest.raises(ConfigError):
        RewardConfig.for_kind("Create", format=-0.1).validate()


def test_component_bounds():
    with pytest.raises(ValueError):
        RewardComponents(structure=1.2)
    with pytest.raises(ValueError):
        RewardComponents(executable=0.5)


@given(st.sampled_from(["QA", "Create", "Modify", "Reconstruct"]), unit, unit, unit, st.sampled_from([0, 1]), unit)
def test_total_in_unit_interval(kind, a, f, s, e, t):
    c = RewardComponents(answer=a, format=f, structure=s, executable=e, tool_use=t)
    assert 0.0 <= total_reward(c, RewardConfig.for_kind(kind)) <= 1.0


@given(st.sampled_from(["QA", "Create", "Modify", "Reconstruct"]), st.sampled_from(COMPONENTS), unit, unit,
       st.lists(unit, min_size=5, max_size=5))
def test_total_monotone_in_each_component(kind, comp, x, y, rest):
    lo, hi = sorted((x, y))
    if comp == "executable":
        lo, hi = 0, 1
    base = dict(zip(COMPONENTS, rest))
    base["executable"] = round(base["executable"])
    cfg = RewardConfig.for_kind(kind)
    r_lo = total_reward(RewardComponents(**{**base, comp: lo}), cfg)
    r_hi = total_reward(RewardComponents(**{**base, comp: hi}), cfg)
    assert r_lo <= r_hi + 1e-12


def test_reconstruct_score(catalog):
    orig = fixture_model("opamp_original")
    assert reconstruct_score(orig, orig, catalog, max_blocks=16) == (1.0, True)
    assert reconstruct_score(orig, SystemModel(), catalog) == (0.0, False)
    fid, ok = reconstruct_score(orig, fixture_model("opamp_rebuilt"), catalog, max_blocks=16)
    assert ok and fid >= 0.9
    assert fid == pytest.approx(0.935, abs=1e-9)


def test_executable_score(catalog):
    assert executable_score(fixture_model("cooling_final"), catalog) == 1
    assert executable_score(fixture_model("gpt4o_case1"), catalog) == 0
    assert executable_score(SystemModel(), catalog) == 0


def test_score_recorded_modify_episode(catalog):
    rec, res = replay_episode("cooling_modify", catalog)
    total, comps = score_episode(res, "Modify", fixture_model(rec["reference_model"]), catalog)
    assert total == 1.0
    assert comps.structure == 1.0 and comps.executable == 1


def test_score_qa_episode(catalog):
    class R:
        transcript = transcript(("model", "<answer>8</answer>"))
        answer = "8"
        final_model = SystemModel()
        tool_use = 1.0

    total, comps = score_episode(R, "QA", "8", catalog)
    assert total == 1.0 and comps.answer == 1.0
