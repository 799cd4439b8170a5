"""Write the recorded case-study episodes to src/blockagent/data/episodes/.

Each record holds the model turns, the plan-step outputs handed back by the
replay builder, and the result texts obtained by running the harness once.
Tests replay the turns and compare against the frozen results.
"""
import json
from pathlib import Path

from blockagent.agent import ReplayPolicy, Session, replay_builder, run_episode, submodel_text
from blockagent.catalog import default_catalog
from blockagent.fixtures import fixture_model
from blockagent.ir import SystemModel
from blockagent.textio import model_to_record

ROOT = Path(__file__).resolve().parents[1] / "src" / "blockagent" / "data"
OUT = ROOT / "episodes"


def lit(obj):
    return json.dumps(obj, ensure_ascii=False)


def tool(name, args, think):
    return f"<think>{think}</think><tool>{lit({'name': name, 'args': args})}</tool>"


def python(code, think):
    return f"<think>{think}</think><python>\n{code}\n</python>"


FINISH = "<think>The requested model is in place.</think><answer>Finish</answer>"


def modify_case():
    final = json.loads((ROOT / "models" / "cooling_final.json").read_text())
    lines = []
    for name in ("Temperature Sensor", "PS-Simulink Converter"):
        lines.append(f"sys_dict[\"Blocks\"][{lit(name)}] = {lit(final['Blocks'][name])}")
    for c in ({"Src": "Fuel Cell Stack/LConn1", "Dst": "Temperature Sensor/LConn1"},
              {"Src": "Temperature Sensor/RConn2", "Dst": "PS-Simulink Converter/LConn1"},
              {"Src": "PS-Simulink Converter/1", "Dst": "Pump Control/2"}):
        lines.append(f"sys_dict[\"Connections\"].append({lit(c)})")
    turns = [
        tool("search_blocks", {"query_list": ["Temperature Sensor"]},
             "Look up the sensor block and its ports before wiring it to the stack."),
        python("\n".join(lines),
               "Add the sensor on the stack's thermal port and convert its output for the controller input."),
        FINISH,
    ]
    return {
        "name": "cooling_modify", "kind": "Modify",
        "task": "Measure the fuel cell stack temperature and feed it to the T_meas input of Pump Control.",
        "initial_model": "cooling_start", "reference_model": "cooling_final",
        "turns": turns, "plan_outputs": [],
    }


def reconstruct_case():
    rebuilt = json.loads((ROOT / "models" / "opamp_rebuilt.json").read_text())
    queries = ["AC Voltage Source", "Capacitor", "Resistor", "Op-Amp", "Voltage Sensor", "Scope"]
    turns = [
        tool("search_blocks", {"query_list": queries},
             "Collect the library entries named in the summary."),
        python(f"sys_dict = {lit(rebuilt)}",
               "Rebuild the inverting differentiator from the summary and probe both voltages."),
        FINISH,
    ]
    return {
        "name": "opamp_reconstruct", "kind": "Reconstruct",
        "task": "Rebuild the circuit described by this summary: an op-amp differentiator driven by an AC source "
                "through a capacitor, with resistive feedback and scoped input and output voltages.",
        "initial_model": None, "reference_model": "opamp_original",
        "turns": turns, "plan_outputs": [],
    }


def rectifier_case():
    raw = json.loads((ROOT / "raw" / "rect_raw.json").read_text())
    merged = json.loads((ROOT / "models" / "rectifier_failed.json").read_text())
    plan = ["Build the AC source and the isolating transformer.",
            "Build the diode bridge, smoothing capacitor, load and measurement chain.",
            "Merge the two parts into one model."]
    turns = [
        tool("plan", {"plan_list": plan}, "Split the rectifier into a supply stage and a bridge stage."),
        "<think>The supply stage is done; move to the bridge.</think><answer>continue</answer>",
        python(f"sys_dict = {lit(merged)}", "Combine both partial models."),
        FINISH,
    ]
    return {
        "name": "rectifier_plan", "kind": "Create",
        "task": "Create a full-wave bridge rectifier fed from a 120 V, 60 Hz source through a step-down transformer.",
        "initial_model": None, "reference_model": None,
        "turns": turns,
        "plan_outputs": [submodel_text(lit(raw["sub1"]), 0), submodel_text(lit(raw["sub2"]), 1)],
    }


def generator_case():
    raw = json.loads((ROOT / "raw" / "pmsg_raw.json").read_text())
    turns = [
        tool("search_blocks", {"query_list": ["Permanent Magnet Synchronous Generator", "Three-Level NPC Converter",
                                              "DC Machine"], "lib": "sps_lib"},
             "Find the generator, converter and machine blocks in the power systems library."),
        python(f"sys_dict = {lit(raw)}", "Chain the prime mover, generator, rectifier stage and DC side."),
        FINISH,
    ]
    return {
        "name": "pmsg_create", "kind": "Create",
        "task": "Create a permanent magnet generator system driven by a DC machine that supplies a DC load "
                "through an AC-DC converter.",
        "initial_model": None, "reference_model": "pmsg_final",
        "turns": turns, "plan_outputs": [],
    }


def record(case):
    cat = default_catalog()
    model = fixture_model(case["initial_model"]) if case["initial_model"] else SystemModel({}, [])
    builder = replay_builder(case["plan_outputs"]) if case["plan_outputs"] else None
    session = Session(model, cat, builder=builder)
    res = run_episode(ReplayPolicy(case["turns"]), session, case["task"])
    case = dict(case)
    case["results"] = res.transcript.results()
    case["expected"] = {"outcome": res.outcome, "final_model": model_to_record(res.final_model),
                        "tool_calls": res.tool_calls, "tool_errors": res.tool_errors}
    return case


def main():
    OUT.mkdir(parents=True, exist_ok=True)
    for make in (modify_case, reconstruct_case, rectifier_case, generator_case):
        case = record(make())
        path = OUT / f"{case['name']}.json"
        path.write_text(json.dumps(case, indent=1, ensure_ascii=False) + "\n", encoding="utf-8")
        print(path.name, case["expected"]["outcome"], len(case["results"]), "results")


if __name__ == "__main__":
    main()
