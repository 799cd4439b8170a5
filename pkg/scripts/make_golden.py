"""Freeze the per-iteration ReGRPO report for seed 0 on the edit-quest environment."""
import pathlib
import sys

sys.path.insert(0, str(pathlib.Path(__file__).resolve().parents[1] / "src"))
from blockagent.catalog import default_catalog  # noqa: E402
from blockagent.config import load_settings  # noqa: E402
from blockagent.regrpo import write_reports_jsonl  # noqa: E402
from blockagent.simlab.experiment import from_settings, golden_reports  # noqa: E402

OUT = pathlib.Path(__file__).resolve().parents[1] / "src" / "blockagent" / "data" / "golden"


def main():
    env, cfg = from_settings(load_settings(sim_defaults=True), default_catalog())
    OUT.mkdir(parents=True, exist_ok=True)
    reports = golden_reports(env, cfg)
    write_reports_jsonl(reports, OUT / "regrpo_seed0.jsonl")
    print(len(reports), "iterations; final mean reward", reports[-1].mean_reward)


if __name__ == "__main__":
    main()
