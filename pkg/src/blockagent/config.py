"""TOML configuration with ``compare``, ``reward``, ``regrpo``, ``schedule`` and ``simlab`` sections.

Every key is optional; unknown sections or keys raise ConfigError naming
the key. Example::

    [compare]
    w_block = 0.4
    w_conn = 0.4
    w_param = 0.2
    max_blocks = 8

    [reward.Create]          # any of answer, format, structure, executable, tool_use
    structure = 0.5

    [regrpo]
    G = 8
    G1 = 4
    G2 = 4
    clip_eps = 0.2
    beta = 0.04
    mu = 1
    adv_mode = "std"

    [schedule]
    kind = "linear"           # linear | exponential | non-replacement
    p0 = 1.0
    horizon = 60

    [simlab]
    iterations = 80
    hint_strength = 2.5
"""
from __future__ import annotations

import dataclasses
import sys
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

from .compare import DEFAULT_WEIGHTS as COMPARE_DEFAULTS
from .compare import CompareWeights, weights_from_config
from .errors import ConfigError
from .regrpo import RegrpoConfig, Schedule
from .reward import COMPONENTS, TASK_KINDS, RewardConfig
from .simlab.experiment import SIM_DEFAULT_SCHEDULE, SIM_STEP_SIZE

SECTIONS = ("compare", "reward", "regrpo", "schedule", "simlab")


@dataclass(frozen=True)
class SimlabSettings:
    """Edit-quest experiment settings used by ``trainsim``."""

    target: str = "rc_filter"
    iterations: int = 80
    n_eval: int = 8
    threshold: float = 0.9
    temperature: float = 1.0
    hint_strength: float = 2.5




@dataclass(frozen=True)
class Settings:
    compare: CompareWeights = COMPARE_DEFAULTS
    max_blocks: int = 8
    reward: dict = field(default_factory=dict)  # kind -> RewardConfig
    regrpo: RegrpoConfig = field(default_factory=RegrpoConfig)
    simlab: SimlabSettings = field(default_factory=SimlabSettings)

    def reward_config(self, kind: str) -> RewardConfig:
        return self.reward.get(kind) or RewardConfig.for_kind(kind)


def _build(cls, section: dict, name: str, **base):
    names = {f.name for f in dataclasses.fields(cls)}
    for k in section:
        if k not in names or k in base:
            raise ConfigError(f"unknown key {name}.{k}")
    try:
        return cls(**base, **section)
    except TypeError as exc:
        raise ConfigError(f"bad value in [{name}]: {exc}") from None


def settings_from_dict(doc: dict, sim_defaults: bool = False) -> Settings:
    """Build Settings; ``sim_defaults`` starts from the sim-lab schedule and step size."""
    for k in doc:
        if k not in SECTIONS:
            raise ConfigError(f"unknown section {k!r}; expected one of {list(SECTIONS)}")
    comp = dict(doc.get("compare", {}))
    max_blocks = comp.pop("max_blocks", 8)
    if not isinstance(max_blocks, int) or max_blocks < 1:
        raise ConfigError("compare.max_blocks must be a positive integer")
    weights = weights_from_config(comp) if comp else COMPARE_DEFAULTS

    rewards = {}
    for kind, sec in doc.get("reward", {}).items():
        if kind not in TASK_KINDS:
            raise ConfigError(f"unknown key reward.{kind}")
        if not isinstance(sec, dict):
            raise ConfigError(f"reward.{kind} must be a table")
        for k in sec:
            if k not in COMPONENTS:
                raise ConfigError(f"unknown key reward.{kind}.{k}")
        rc = RewardConfig.for_kind(kind, **sec)
        rc.validate()
        rewards[kind] = rc

    sim_sec = dict(doc.get("simlab", {}))
    sim = _build(SimlabSettings, sim_sec, "simlab")
    sched_base = SIM_DEFAULT_SCHEDULE if sim_defaults else Schedule()
    sched = dataclasses.replace(sched_base, **_checked(doc, "schedule", Schedule))
    reg_sec = dict(doc.get("regrpo", {}))
    if "schedule" in reg_sec:
        raise ConfigError("unknown key regrpo.schedule (use the [schedule] section)")
    if sim_defaults:
        reg_sec.setdefault("step_size", SIM_STEP_SIZE)
    reg = _build(RegrpoConfig, reg_sec, "regrpo", schedule=sched)
    return Settings(weights, max_blocks, rewards, reg, sim)


def _checked(doc, name, cls) -> dict:
    sec = doc.get(name, {})
    if not isinstance(sec, dict):
        raise ConfigError(f"[{name}] must be a table")
    names = {f.name for f in dataclasses.fields(cls)}
    for k in sec:
        if k not in names:
            raise ConfigError(f"unknown key {name}.{k}")
    return dict(sec)


def load_settings(path: Optional[str] = None, sim_defaults: bool = False) -> Settings:
    if path is None:
        return settings_from_dict({}, sim_defaults)
    p = Path(path)
    try:
        with open(p, "rb") as fh:
            doc = tomllib.load(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read config {p}: {exc}") from None
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"{p}: {exc}") from None
    return settings_from_dict(doc, sim_defaults)
