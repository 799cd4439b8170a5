"""Tabular softmax policies with exact log-probabilities and gradients.

A rollout's decisions are ``(token position, state, action, bias)``
tuples. ``bias`` is a fixed additive logit offset (how a reflection in the
context shifts the choice); it is part of the context, not a parameter.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..errors import EvalError


@dataclass(frozen=True)
class Decision:
    position: int
    state: int
    action: int
    bias: tuple = ()  # per-action logit offsets, empty for none


def log_softmax(z: np.ndarray) -> np.ndarray:
    m = np.max(z)
    return z - m - np.log(np.sum(np.exp(z - m)))


@dataclass
class TabularPolicy:
    logits: np.ndarray
    temperature: float = 1.0
    frozen: bool = field(default=False, repr=False)

    def __post_init__(self):
        self.logits = np.array(self.logits, dtype=float)
        if self.logits.ndim != 2:
            raise ValueError("logit table must be 2-D (states x actions)")
        if not np.all(np.isfinite(self.logits)):
            raise ValueError("logits must be finite")
        if self.temperature <= 0:
            raise ValueError("temperature must be positive")

    @classmethod
    def uniform(cls, n_states: int, n_actions: int, temperature: float = 1.0) -> "TabularPolicy":
        return cls(np.zeros((n_states, n_actions)), temperature)

    @property
    def n_states(self) -> int:
        return self.logits.shape[0]

    @property
    def n_actions(self) -> int:
        return self.logits.shape[1]

    def _z(self, state, bias=()):
        if not 0 <= state < self.n_states:
            raise EvalError(f"unknown state {state}")
        z = self.logits[state] / self.temperature
        if len(bias):
            z = z + np.asarray(bias, dtype=float)
        return z

    def log_probs(self, state: int, bias=()) -> np.ndarray:
        return log_softmax(self._z(state, bias))

    def probs(self, state: int, bias=()) -> np.ndarray:
        return np.exp(self.log_probs(state, bias))

    def sample(self, state: int, rng: np.random.Generator, bias=()) -> int:
        p = self.probs(state, bias)
        # inverse CDF on one uniform draw keeps rng consumption fixed per decision
        u = rng.random()
        return int(min(np.searchsorted(np.cumsum(p), u, side="right"), self.n_actions - 1))

    def snapshot(self) -> "TabularPolicy":
        return TabularPolicy(self.logits.copy(), self.temperature, frozen=True)

    def logprobs(self, rollout) -> np.ndarray:
        """Per-token log-probabilities; template and tool tokens get 0."""
        out = np.zeros(len(rollout.tokens))
        for d in rollout.decisions:
            if not 0 <= d.action < self.n_actions:
                raise EvalError(f"unknown action {d.action}")
            out[d.position] = self.log_probs(d.state, d.bias)[d.action]
        return out

    def gradient(self, rollouts, token_grads) -> np.ndarray:
        """Chain rule from d objective / d logp per token to the logit table."""
        g = np.zeros_like(self.logits)
        for ro, tg in zip(rollouts, token_grads):
            for d in ro.decisions:
                w = tg[d.position]
                if w == 0.0:
                    continue
                p = self.probs(d.state, d.bias)
                onehot = np.zeros(self.n_actions)
                onehot[d.action] = 1.0
                g[d.state] += w * (onehot - p) / self.temperature
        return g

    def ascend(self, rollouts, token_grads, step_size: float):
        if self.frozen:
            raise EvalError("cannot update a frozen policy snapshot")
        self.logits += step_size * self.gradient(rollouts, token_grads)


def analytic_gradient(policy: TabularPolicy, trajectories, evals_old_ref, advantages, cfg) -> np.ndarray:
    """Gradient of the group-mean masked objective with respect to the logits.

    ``evals_old_ref`` holds (logp_old, logp_ref) per trajectory; logp_new is
    read from ``policy``.
    """
    from ..regrpo import PolicyEval, objective_token_grads

    grads = []
    for tr, (old, ref), a in zip(trajectories, evals_old_ref, advantages):
        ev = PolicyEval(policy.logprobs(tr.rollout), old, ref)
        grads.append(objective_token_grads(tr, ev, a, cfg) / len(trajectories))
    return policy.gradient([t.rollout for t in trajectories], grads)


def group_objective(policy: TabularPolicy, trajectories, evals_old_ref, advantages, cfg) -> float:
    from ..regrpo import PolicyEval, masked_objective

    vals = [masked_objective(tr, PolicyEval(policy.logprobs(tr.rollout), o, r), a, cfg)[0]
            for tr, (o, r), a in zip(trajectories, evals_old_ref, advantages)]
    return float(np.mean(vals))


def relative_error(a, n) -> float:
    a, n = np.asarray(a, dtype=float), np.asarray(n, dtype=float)
    err = np.abs(a - n) / np.maximum(np.maximum(np.abs(a), np.abs(n)), 1e-6)
    return float(err.max()) if err.size else 0.0


def finite_difference_gradient(policy: TabularPolicy, trajectories, evals_old_ref, advantages, cfg,
                               h: float = 1e-5) -> np.ndarray:
    """Central differences of :func:`group_objective` over every logit."""
    g = np.zeros_like(policy.logits)
    for idx in np.ndindex(*policy.logits.shape):
        base = policy.logits[idx]
        policy.logits[idx] = base + h
        up = group_objective(policy, trajectories, evals_old_ref, advantages, cfg)
        policy.logits[idx] = base - h
        dn = group_objective(policy, trajectories, evals_old_ref, advantages, cfg)
        policy.logits[idx] = base
        g[idx] = (up - dn) / (2 * h)
    return g
