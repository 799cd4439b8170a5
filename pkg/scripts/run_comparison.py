"""GRPO versus ReGRPO on the edit-quest environment over a list of seeds.

Usage: python scripts/run_comparison.py [--seeds 100..119] [--out results/]
"""
import argparse
import pathlib
import sys
import time

sys.path.insert(0, str(pathlib.Path(__file__).resolve().parents[1] / "src"))
from blockagent.catalog import default_catalog  # noqa: E402
from blockagent.cli import _parse_seeds  # noqa: E402
from blockagent.config import load_settings  # noqa: E402
from blockagent.simlab.experiment import from_settings, reflection_trend, run_comparison  # noqa: E402


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--seeds", default="100..119")
    ap.add_argument("--config", default=None)
    ap.add_argument("--out", default=None, help="directory for per-arm CSV curves")
    args = ap.parse_args(argv)
    env, cfg = from_settings(load_settings(args.config, sim_defaults=True), default_catalog())
    seeds = _parse_seeds(args.seeds)
    t0 = time.time()
    grpo, regrpo = run_comparison(env, cfg, seeds)
    rho, p = reflection_trend(regrpo)
    print(f"seeds {seeds[0]}..{seeds[-1]} ({len(seeds)}), {cfg.iterations} iterations, {time.time() - t0:.1f} s")
    for rep in (grpo, regrpo):
        its = rep.iterations_to(cfg.threshold)
        print(f"{rep.arm:7s} median iterations to {cfg.threshold}: {rep.median_iterations(cfg.threshold):.1f}  {its}")
        print(f"{'':7s} final eval reward {rep.mean_curve('eval_reward')[-1]:.4f}")
    print(f"reflection count vs iteration: spearman {rho:.3f}, p = {p:.2e}")
    if args.out:
        out = pathlib.Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        grpo.to_csv(out / "grpo.csv")
        regrpo.to_csv(out / "regrpo.csv")


if __name__ == "__main__":
    main()
