"""Synthetic environments, tabular policies and GRPO / ReGRPO comparisons."""
from ..tasks import StageConfig, stage_filter
from .envs import CompositionalQAEnv, EditQuestEnv, SimRollout, make_edit_env
from .experiment import (
    ExperimentConfig,
    ExperimentReport,
    SeedCurve,
    reflection_trend,
    run_arm,
    run_comparison,
    run_seed,
    with_p0,
)
from .policy import (
    TabularPolicy,
    analytic_gradient,
    finite_difference_gradient,
    group_objective,
    relative_error,
)

__all__ = [
    "StageConfig", "stage_filter",
    "CompositionalQAEnv", "EditQuestEnv", "SimRollout", "make_edit_env",
    "ExperimentConfig", "ExperimentReport", "SeedCurve", "reflection_trend", "run_arm", "run_comparison",
    "run_seed", "with_p0",
    "TabularPolicy", "analytic_gradient", "finite_difference_gradient", "group_objective", "relative_error",
]
