"""GRPO versus ReGRPO runs on the synthetic environments.

Both arms of a seed share the rollout seed, so any difference between
them comes from the reflections alone. Progress is measured on separate
evaluation rollouts without reflections, drawn from their own stream.
"""
from __future__ import annotations

import csv
import json
from dataclasses import asdict, dataclass, field, replace
from typing import Optional

import numpy as np

from ..regrpo import RegrpoConfig, RegrpoState, Schedule, grpo_config, regrpo_iteration
from .policy import TabularPolicy

ARMS = ("grpo", "regrpo")

# the tabular objective is averaged over every model token of a long
# transcript, so sim-lab runs need a large step on the logits
SIM_STEP_SIZE = 2000.0
SIM_DEFAULT_SCHEDULE = Schedule("linear", 1.0, 60)


def sim_regrpo_config(**kw) -> RegrpoConfig:
    kw.setdefault("step_size", SIM_STEP_SIZE)
    kw.setdefault("schedule", SIM_DEFAULT_SCHEDULE)
    return RegrpoConfig(**kw)


@dataclass(frozen=True)
class ExperimentConfig:
    iterations: int = 80
    n_eval: int = 8
    threshold: float = 0.9
    temperature: float = 1.0
    regrpo: RegrpoConfig = field(default_factory=sim_regrpo_config)


@dataclass
class SeedCurve:
    seed: int
    mean_reward: list
    eval_reward: list
    reflections: list
    tool_calls: list
    buffer_size: list
    objectives: list

    def iterations_to(self, threshold: float) -> Optional[int]:
        """First 1-based iteration whose evaluation reward reaches ``threshold``."""
        for i, r in enumerate(self.eval_reward):
            if r >= threshold:
                return i + 1
        return None


@dataclass
class ExperimentReport:
    arm: str
    curves: list

    def __post_init__(self):
        lengths = {len(c.mean_reward) for c in self.curves}
        for c in self.curves:
            lengths |= {len(c.eval_reward), len(c.reflections), len(c.tool_calls)}
        if len(lengths) > 1:
            raise ValueError("curves have inconsistent lengths")

    @property
    def seeds(self) -> list:
        return [c.seed for c in self.curves]

    def iterations_to(self, threshold: float, cap: Optional[int] = None) -> list:
        """Per-seed iterations to threshold; unreached seeds count as ``cap`` (default one past the run)."""
        out = []
        for c in self.curves:
            k = c.iterations_to(threshold)
            out.append(k if k is not None else (cap if cap is not None else len(c.eval_reward) + 1))
        return out

    def median_iterations(self, threshold: float) -> float:
        return float(np.median(self.iterations_to(threshold)))

    def mean_curve(self, key: str) -> np.ndarray:
        return np.mean([getattr(c, key) for c in self.curves], axis=0)

    def data(self) -> list:
        """Arm-free records, so equal runs compare equal."""
        return [asdict(c) for c in self.curves]

    def to_jsonl(self, path):
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            for c in self.curves:
                fh.write(json.dumps(asdict(c), sort_keys=True) + "\n")

    def to_csv(self, path):
        with open(path, "w", encoding="utf-8", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["seed", "iteration", "mean_reward", "eval_reward", "reflections", "tool_calls", "buffer_size"])
            for c in self.curves:
                for i in range(len(c.mean_reward)):
                    w.writerow([c.seed, i + 1, repr(c.mean_reward[i]), repr(c.eval_reward[i]),
                                c.reflections[i], c.tool_calls[i], c.buffer_size[i]])


def _streams(seed: int):
    """Independent rollout, reflection and evaluation streams for one seed."""
    ss = np.random.SeedSequence(seed)
    return [np.random.default_rng(s) for s in ss.spawn(3)]


def evaluate(policy, env, n: int, rng: np.random.Generator) -> float:
    rs = []
    for q in env.questions():
        for _ in range(n):
            rs.append(env.reward(q, env.rollout(policy, q, "", rng)))
    return float(np.mean(rs))


def run_seed(env, cfg: ExperimentConfig, seed: int, regrpo: Optional[RegrpoConfig] = None) -> SeedCurve:
    rcfg = regrpo or cfg.regrpo
    roll_rng, refl_rng, eval_rng = _streams(seed)
    policy = TabularPolicy.uniform(env.n_states, env.n_actions, cfg.temperature)
    state = RegrpoState(reference=policy.snapshot())
    curve = SeedCurve(seed, [], [], [], [], [], [])
    questions = env.questions()
    for _ in range(cfg.iterations):
        rep = regrpo_iteration(questions, policy, env, rcfg, state, roll_rng, refl_rng)
        curve.mean_reward.append(rep.mean_reward)
        curve.eval_reward.append(evaluate(policy, env, cfg.n_eval, eval_rng))
        curve.reflections.append(rep.reflections)
        curve.tool_calls.append(rep.tool_calls)
        curve.buffer_size.append(rep.buffer_size)
        curve.objectives.append(rep.objectives)
    return curve


def run_arm(env, cfg: ExperimentConfig, seeds, arm: str) -> ExperimentReport:
    if arm not in ARMS:
        raise ValueError(f"arm must be one of {ARMS}, got {arm!r}")
    rcfg = cfg.regrpo if arm == "regrpo" else grpo_config(cfg.regrpo)
    return ExperimentReport(arm, [run_seed(env, cfg, s, rcfg) for s in seeds])


def run_comparison(env, cfg: ExperimentConfig, seeds):
    """(GRPO report, ReGRPO report) over the same seeds."""
    seeds = list(seeds)
    if len(seeds) < 2:
        raise ValueError("a comparison needs at least two seeds")
    return run_arm(env, cfg, seeds, "grpo"), run_arm(env, cfg, seeds, "regrpo")


def reflection_trend(report: ExperimentReport):
    """Spearman correlation (and p-value) of reflection count against iteration, pooled over seeds."""
    from scipy.stats import spearmanr

    its, counts = [], []
    for c in report.curves:
        its += list(range(1, len(c.reflections) + 1))
        counts += list(c.reflections)
    if len(set(counts)) < 2:
        return 0.0, 1.0  # no variation, no trend
    res = spearmanr(its, counts)
    return float(res.statistic), float(res.pvalue)


def with_p0(cfg: ExperimentConfig, p0: float) -> ExperimentConfig:
    return replace(cfg, regrpo=replace(cfg.regrpo, schedule=replace(cfg.regrpo.schedule, p0=p0)))


def from_settings(settings, catalog):
    """(edit-quest env, ExperimentConfig) for a loaded configuration."""
    from ..fixtures import fixture_model
    from .envs import make_edit_env

    sim = settings.simlab
    env = make_edit_env(fixture_model(sim.target), catalog, name=sim.target, hint_strength=sim.hint_strength)
    cfg = ExperimentConfig(sim.iterations, sim.n_eval, sim.threshold, sim.temperature, settings.regrpo)
    return env, cfg


def golden_reports(env, cfg: ExperimentConfig, seed: int = 0, iterations: int = 10) -> list:
    """Raw per-iteration reports of a short ReGRPO run (the frozen regression record)."""
    roll_rng, refl_rng, _ = _streams(seed)
    policy = TabularPolicy.uniform(env.n_states, env.n_actions, cfg.temperature)
    state = RegrpoState(reference=policy.snapshot())
    return [regrpo_iteration(env.questions(), policy, env, cfg.regrpo, state, roll_rng, refl_rng)
            for _ in range(iterations)]
