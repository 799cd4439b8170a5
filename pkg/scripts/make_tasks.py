"""Write the small example models and the task directory under src/blockagent/data/tasks/."""
import json
import pathlib
import sys

sys.path.insert(0, str(pathlib.Path(__file__).resolve().parents[1] / "src"))
from blockagent.fixtures import fixture_model  # noqa: E402
from blockagent.ir import canonicalize  # noqa: E402
from blockagent.tasks import TaskRecord, write_task  # noqa: E402
from blockagent.textio import emit_model_text, model_from_record  # noqa: E402

DATA = pathlib.Path(__file__).resolve().parents[1] / "src" / "blockagent" / "data"


def c(s, d):
    return {"Src": s, "Dst": d}


# four blocks, three connections; the partial copy drops the leaf scope
signal_chain = {
    "Blocks": {
        "Step": {"Type": "Constant", "Value": 1},
        "Bias": {"Type": "Constant", "Value": 0.5},
        "Add": {"Type": "Sum", "Inputs": "++"},
        "View": {"Type": "Scope"},
    },
    "Connections": [c("Step/1", "Add/1"), c("Bias/1", "Add/2"), c("Add/1", "View/1")],
}
partial = {
    "Blocks": {k: v for k, v in signal_chain["Blocks"].items() if k != "View"},
    "Connections": signal_chain["Connections"][:2],
}


def write_model(name, rec):
    (DATA / "models" / f"{name}.json").write_text(emit_model_text(canonicalize(model_from_record(rec))),
                                                  encoding="utf-8", newline="\n")


def main():
    write_model("signal_chain", signal_chain)
    write_model("signal_chain_partial", partial)
    tasks = [
        TaskRecord("signal_chain", "Create", "Add two constants and show the sum on a scope.",
                   fixture_model("signal_chain")),
        TaskRecord("rc_filter", "Create",
                   "Create an RC low-pass filter driven by a 5 V, 50 Hz source and scope the capacitor voltage.",
                   fixture_model("rc_filter")),
        TaskRecord("pmsg", "Create",
                   "Create a permanent magnet generator system driven by a DC machine that supplies a DC load "
                   "through an AC-DC converter.", fixture_model("pmsg_final")),
        TaskRecord("cooling_temperature", "Modify",
                   "Measure the fuel cell stack temperature and feed it to the T_meas input of Pump Control.",
                   fixture_model("cooling_final"), initial_model=fixture_model("cooling_start")),
        TaskRecord("opamp", "Reconstruct", "Rebuild the op-amp circuit from its summary.",
                   fixture_model("opamp_original")),
        TaskRecord("rc_filter_blocks", "QA", "How many blocks does the RC filter model contain?",
                   reference_answer="8"),
        TaskRecord("opamp_feedback", "QA", "Which block type sits in the op-amp feedback path?",
                   reference_answer="Resistor"),
    ]
    for t in tasks:
        d = DATA / "tasks" / t.kind.lower()
        d.mkdir(parents=True, exist_ok=True)
        write_task(t, d / f"{t.id}.json")
        print(t.kind, t.id, t.block_count)


if __name__ == "__main__":
    main()
