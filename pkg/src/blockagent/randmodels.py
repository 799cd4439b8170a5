"""Seeded random models for property checks and the comparison corpus."""
from __future__ import annotations

import numpy as np

from .ir import (
    BlockInstance,
    Connection,
    ConservingLeft,
    ConservingRight,
    PortRef,
    Quantity,
    SignalPort,
    SystemModel,
    canonicalize,
)

# (type, signal ins, signal outs, left conserving, right conserving, param name, unit)
VOCAB = (
    ("Constant", 0, 1, 0, 0, "Value", None),
    ("Gain", 1, 1, 0, 0, "Gain", None),
    ("Sum", 2, 1, 0, 0, None, None),
    ("Scope", 1, 0, 0, 0, None, None),
    ("Resistor", 0, 0, 1, 1, "R", "Ohm"),
    ("Capacitor", 0, 0, 1, 1, "c", "F"),
    ("Electrical Reference", 0, 0, 1, 0, None, None),
    ("Voltage Sensor", 0, 0, 1, 2, None, None),
)
_BY_TYPE = {v[0]: v for v in VOCAB}


def _ports(type_name):
    _, ins, outs, lc, rc, _, _ = _BY_TYPE[type_name]
    return ins, outs, lc, rc


def random_model(rng: np.random.Generator, n_blocks: int, n_types: int = len(VOCAB),
                 p_param: float = 0.7) -> SystemModel:
    """A model of ``n_blocks`` blocks wired with random type-consistent connections."""
    blocks = {}
    vocab = VOCAB[:max(1, n_types)]
    for i in range(n_blocks):
        t, _, _, _, _, pname, unit = vocab[int(rng.integers(len(vocab)))]
        params = {}
        if pname is not None and rng.random() < p_param:
            v = int(rng.integers(1, 5))
            params[pname] = Quantity(v, unit) if unit else v
        blocks[f"B{i}"] = BlockInstance(t, params)
    names = sorted(blocks)
    outs, ins, cons = [], [], []
    for n in names:
        ni, no, lc, rc = _ports(blocks[n].type_name)
        outs += [PortRef(n, SignalPort(k)) for k in range(1, no + 1)]
        ins += [PortRef(n, SignalPort(k)) for k in range(1, ni + 1)]
        cons += [PortRef(n, ConservingLeft(k)) for k in range(1, lc + 1)]
        cons += [PortRef(n, ConservingRight(k)) for k in range(1, rc + 1)]
    conns = []
    for d in ins:
        if outs and rng.random() < 0.7:
            s = outs[int(rng.integers(len(outs)))]
            if s.block != d.block:
                conns.append(Connection(s, d))
    n_phys = int(rng.integers(0, len(cons) + 1)) if len(cons) > 1 else 0
    for _ in range(n_phys):
        i, j = rng.choice(len(cons), size=2, replace=False)
        if cons[i].block != cons[j].block:
            conns.append(Connection(cons[int(i)], cons[int(j)]))
    return canonicalize(SystemModel(blocks, conns))


def perturb(rng: np.random.Generator, model: SystemModel, n_edits: int = 2) -> SystemModel:
    """Rename every block and apply small structural edits (drop, retype, param change)."""
    names = sorted(model.blocks)
    perm = rng.permutation(len(names))
    rename = {n: f"N{int(perm[i])}" for i, n in enumerate(names)}
    blocks = {rename[n]: b for n, b in model.blocks.items()}
    conns = [Connection(PortRef(rename[c.src.block], c.src.port), PortRef(rename[c.dst.block], c.dst.port))
             for c in model.connections]
    for _ in range(n_edits):
        op = int(rng.integers(3))
        keys = sorted(blocks)
        if op == 0 and conns:
            conns.pop(int(rng.integers(len(conns))))
        elif op == 1 and len(keys) > 1:
            victim = keys[int(rng.integers(len(keys)))]
            del blocks[victim]
            conns = [c for c in conns if victim not in (c.src.block, c.dst.block)]
        elif keys:
            k = keys[int(rng.integers(len(keys)))]
            b = blocks[k]
            params = {p: (Quantity(v.value + 1, v.unit) if isinstance(v, Quantity) else v + 1)
                      for p, v in b.params.items()}
            blocks[k] = BlockInstance(b.type_name, params)
    return canonicalize(SystemModel(blocks, conns))


def comparison_pairs(seed: int, n_pairs: int, max_blocks: int = 6):
    """Seeded (candidate, reference) pairs: half perturbed copies, half independent draws."""
    rng = np.random.default_rng(seed)
    out = []
    for i in range(n_pairs):
        if i % 2 == 0:
            ref = random_model(rng, int(rng.integers(1, max_blocks + 1)))
            cand = perturb(rng, ref, int(rng.integers(0, 3)))
        else:
            # independent draws over a shared small vocabulary so that types overlap
            ref = random_model(rng, int(rng.integers(1, max_blocks + 1)), n_types=4)
            cand = random_model(rng, int(rng.integers(1, max_blocks + 1)), n_types=4)
        out.append((cand, ref))
    return out
