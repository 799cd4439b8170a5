"""Structural similarity between a candidate model and a reference.

A mapping pairs candidate blocks with reference blocks of the same type
(injective, possibly partial). Under a mapping

* block F1 = 2|M| / (|cand| + |ref|)
* connection F1 counts candidate connections whose image is a reference
  connection; conserving-to-conserving connections are compared undirected
* param match is the fraction of all reference parameters that the mapped
  candidate blocks reproduce (extra candidate parameters are ignored, and
  parameters of unmapped reference blocks count as missed)

and the total is their weighted sum (0.4 / 0.4 / 0.2 by default). The brute
force search maximizes the total exactly for small models; the greedy search
is the scalable surrogate.
"""
from __future__ import annotations

import heapq
import math
from dataclasses import dataclass, field
from typing import Optional

from .catalog import Catalog, resolve_port
from .errors import ConfigError, FlattenError, NotFound, SizeExceeded
from .hierarchy import flatten
from .ir import (
    BlockInstance,
    Connection,
    NamedAlias,
    PortRef,
    Quantity,
    SystemModel,
    canonicalize,
    is_conserving,
)

BRUTE_FORCE_LIMIT = 8


@dataclass(frozen=True)
class CompareWeights:
    w_block: float = 0.4
    w_conn: float = 0.4
    w_param: float = 0.2

    def __post_init__(self):
        ws = (self.w_block, self.w_conn, self.w_param)
        if any(not math.isfinite(w) or w < 0 for w in ws) or sum(ws) <= 0:
            raise ConfigError(f"compare weights must be non-negative with a positive sum, got {ws}")

    def normalized(self):
        s = self.w_block + self.w_conn + self.w_param
        return self.w_block / s, self.w_conn / s, self.w_param / s


DEFAULT_WEIGHTS = CompareWeights()


@dataclass(frozen=True)
class SimilarityReport:
    block_f1: float
    connection_f1: float
    param_match: float
    total: float
    mapping: dict = field(default_factory=dict)  # candidate name -> reference name
    method: str = "bruteforce"

    def to_record(self) -> dict:
        return {
            "block_f1": self.block_f1,
            "connection_f1": self.connection_f1,
            "param_match": self.param_match,
            "total": self.total,
            "mapped": len(self.mapping),
            "method": self.method,
        }


# -- preparation ---------------------------------------------------------------

def _resolve_model(model: SystemModel, catalog: Optional[Catalog]) -> SystemModel:
    """Flatten, then rewrite type and port aliases to catalog canonical names."""
    try:
        model = flatten(model)
    except FlattenError:
        model = canonicalize(model)
    if catalog is None:
        return model
    defs, blocks = {}, {}
    for name, blk in model.blocks.items():
        try:
            bdef = catalog.resolve_type(blk.type_name)
        except NotFound:
            blocks[name] = blk
            continue
        defs[name] = bdef
        blocks[name] = BlockInstance(bdef.type_name, blk.params, blk.inner, blk.summary)

    def fix(ref, role):
        if not isinstance(ref, PortRef) or not isinstance(ref.port, NamedAlias) or ref.block not in defs:
            return ref
        try:
            return PortRef(ref.block, resolve_port(defs[ref.block], ref.port, role).id)
        except NotFound:
            return ref

    conns = [Connection(fix(c.src, "src"), fix(c.dst, "dst")) for c in model.connections]
    return canonicalize(SystemModel(blocks, conns))


def edge_key(conn: Connection, rename=None):
    """Hashable identity of a connection; undirected when both ends are conserving."""
    def end(ref):
        block = ref.block if rename is None else rename(ref.block)
        return (block, str(ref.port))

    if not isinstance(conn.src, PortRef) or not isinstance(conn.dst, PortRef):
        return ("multi", str(conn.src), str(conn.dst))
    a, b = end(conn.src), end(conn.dst)
    if is_conserving(conn.src.port) and is_conserving(conn.dst.port):
        return frozenset((a, b)) if a != b else frozenset((a,))
    return (a, b)


def values_match(ref_value, cand_value, rel_tol=1e-9) -> bool:
    if isinstance(ref_value, bool) or isinstance(cand_value, bool):
        return ref_value == cand_value
    if isinstance(ref_value, Quantity) or isinstance(cand_value, Quantity):
        if not (isinstance(ref_value, Quantity) and isinstance(cand_value, Quantity)):
            return False
        return ref_value.unit.strip() == cand_value.unit.strip() and values_match(ref_value.value, cand_value.value)
    if isinstance(ref_value, (int, float)) and isinstance(cand_value, (int, float)):
        return math.isclose(ref_value, cand_value, rel_tol=rel_tol, abs_tol=1e-12)
    if isinstance(ref_value, tuple) and isinstance(cand_value, tuple):
        return len(ref_value) == len(cand_value) and all(values_match(a, b) for a, b in zip(ref_value, cand_value))
    if isinstance(ref_value, str) and isinstance(cand_value, str):
        return " ".join(ref_value.split()) == " ".join(cand_value.split())
    return False


def param_counts(cand_blk: BlockInstance, ref_blk: BlockInstance):
    """(reproduced, total) reference parameters for one mapped pair."""
    hit = sum(1 for k, v in ref_blk.params.items() if k in cand_blk.params and values_match(v, cand_blk.params[k]))
    return hit, len(ref_blk.params)


class _Problem:
    """Precomputed tables shared by both searches."""

    def __init__(self, cand: SystemModel, ref: SystemModel, weights: CompareWeights):
        self.cand, self.ref = cand, ref
        self.wb, self.wc, self.wp = weights.normalized()
        self.cnames = sorted(cand.blocks)
        self.rnames = sorted(ref.blocks)
        self.nc, self.nr = len(self.cnames), len(self.rnames)
        self.compat = {
            c: [r for r in self.rnames if ref.blocks[r].type_name == cand.blocks[c].type_name]
            for c in self.cnames
        }
        self.ref_edges = {edge_key(e) for e in ref.connections}
        self.cand_edges = list(dict.fromkeys(edge_key(e) for e in cand.connections))
        self.cand_conns = [e for e in cand.connections]
        self.n_ref_edges = len(self.ref_edges)
        self.n_cand_edges = len(self.cand_edges)
        self.ref_param_total = sum(len(b.params) for b in ref.blocks.values())
        self.pcount = {
            (c, r): param_counts(cand.blocks[c], ref.blocks[r]) for c in self.cnames for r in self.compat[c]
        }

    def image(self, conn, mapping):
        """Reference-side key of a candidate connection, or None while unmapped.

        Endpoints naming no block of either model (dangling in both) are
        compared by their literal name. A dangling candidate endpoint that
        names a real reference block never matches: the block was not built.
        """
        if not isinstance(conn.src, PortRef) or not isinstance(conn.dst, PortRef):
            return None
        for b in (conn.src.block, conn.dst.block):
            if b in self.cand.blocks:
                if b not in mapping:
                    return None
            elif b in self.ref.blocks:
                return None
        return edge_key(conn, lambda b: mapping.get(b, b))

    def conn_matches(self, mapping) -> int:
        hits = set()
        for c in self.cand_conns:
            key = self.image(c, mapping)
            if key is not None and key in self.ref_edges:
                hits.add(key)
        return len(hits)

    def parts(self, k, conn_hits, p_hit):
        both_empty = self.nc == 0 and self.nr == 0
        block_f1 = 1.0 if both_empty else 2.0 * k / (self.nc + self.nr)
        if self.n_cand_edges == 0 and self.n_ref_edges == 0:
            conn_f1 = 1.0 if (k > 0 or both_empty) else 0.0
        else:
            conn_f1 = 2.0 * conn_hits / (self.n_cand_edges + self.n_ref_edges)
        if self.ref_param_total == 0:
            param = 1.0 if (k > 0 or both_empty) else 0.0
        else:
            param = p_hit / self.ref_param_total
        return block_f1, conn_f1, param

    def total_of(self, parts):
        b, c, p = parts
        return self.wb * b + self.wc * c + self.wp * p

    def evaluate(self, mapping):
        p_hit = sum(self.pcount[(c, r)][0] for c, r in mapping.items())
        return self.parts(len(mapping), self.conn_matches(mapping), p_hit)

    def report(self, mapping, method):
        parts = self.evaluate(mapping)
        total = min(1.0, max(0.0, self.total_of(parts)))
        return SimilarityReport(*parts, total=total, mapping=dict(sorted(mapping.items())), method=method)


def _prepare(cand, ref, catalog, weights):
    weights = weights or DEFAULT_WEIGHTS
    return _Problem(_resolve_model(cand, catalog), _resolve_model(ref, catalog), weights)


# -- exhaustive search ---------------------------------------------------------

def _bruteforce(pb: _Problem):
    order = sorted(pb.cnames, key=lambda c: (len(pb.compat[c]), c))
    pos = {c: i for i, c in enumerate(order)}
    # connections decided once their later endpoint is assigned
    decide_at = [[] for _ in order]
    fixed = set()  # connections between dangling names match or not regardless of mapping
    for e in pb.cand_conns:
        if not isinstance(e.src, PortRef) or not isinstance(e.dst, PortRef):
            continue
        idx = [pos[b] for b in (e.src.block, e.dst.block) if b in pos]
        if idx:
            decide_at[max(idx)].append(e)
        else:
            key = pb.image(e, {})
            if key in pb.ref_edges:
                fixed.add(key)
    remaining_edges = [0] * (len(order) + 1)
    for i in range(len(order) - 1, -1, -1):
        remaining_edges[i] = remaining_edges[i + 1] + len(decide_at[i])

    best = {"total": -1.0, "mapping": {}}
    mapping, used = {}, set()

    def rec(i, hits, p_hit):
        k = len(mapping)
        if i == len(order):
            t = pb.total_of(pb.parts(k, len(hits), p_hit))
            if t > best["total"] + 1e-12:
                best["total"], best["mapping"] = t, dict(mapping)
            return
        # optimistic bound: every remaining block mapped, every pending edge hit, params perfect
        k_up = k + min(len(order) - i, pb.nr - len(used))
        b_up, c_up, _ = pb.parts(k_up, min(len(hits) + remaining_edges[i], pb.n_ref_edges), 0)
        bound = pb.total_of((b_up, c_up, 1.0))
        if bound <= best["total"] + 1e-12:
            return
        c = order[i]
        for r in pb.compat[c] + [None]:
            if r is not None and r in used:
                continue
            if r is not None:
                mapping[c] = r
                used.add(r)
            new = set()
            for e in decide_at[i]:
                key = pb.image(e, mapping)
                if key is not None and key in pb.ref_edges and key not in hits:
                    new.add(key)
            hits |= new
            ph = pb.pcount[(c, r)][0] if r is not None else 0
            rec(i + 1, hits, p_hit + ph)
            hits -= new
            if r is not None:
                del mapping[c]
                used.discard(r)

    rec(0, set(fixed), 0)
    return best["mapping"]


def optimal_mapping_bruteforce(cand: SystemModel, ref: SystemModel, catalog: Optional[Catalog] = None,
                               weights: Optional[CompareWeights] = None,
                               max_blocks: int = BRUTE_FORCE_LIMIT) -> SimilarityReport:
    """Exact maximum of the total over all type-compatible injective mappings."""
    pb = _prepare(cand, ref, catalog, weights)
    n = max(pb.nc, pb.nr)
    if n > max_blocks:
        raise SizeExceeded(f"exhaustive comparison is limited to {max_blocks} blocks, models have {n}")
    return pb.report(_bruteforce(pb), "bruteforce")


# -- greedy surrogate ------------------------------------------------------------

def _signatures(model: SystemModel):
    sig = {n: {} for n in model.blocks}

    def bump(name, key):
        d = sig[name]
        d[key] = d.get(key, 0) + 1

    for c in model.connections:
        if not isinstance(c.src, PortRef) or not isinstance(c.dst, PortRef):
            continue
        if c.src.block not in sig or c.dst.block not in sig:
            continue
        st, dt = model.blocks[c.src.block].type_name, model.blocks[c.dst.block].type_name
        undirected = is_conserving(c.src.port) and is_conserving(c.dst.port)
        bump(c.src.block, ("~" if undirected else ">", str(c.src.port), dt, str(c.dst.port)))
        bump(c.dst.block, ("~" if undirected else "<", str(c.dst.port), st, str(c.src.port)))
    return sig


def _overlap(a: dict, b: dict) -> int:
    return sum(min(v, b[k]) for k, v in a.items() if k in b)


def _construct(pb: _Problem, csig, rsig, incident, params_first: bool):
    """One greedy pass; priority is (completed connections, signature overlap, parameter hits)."""
    base = {}
    for c in pb.cnames:
        for r in pb.compat[c]:
            hit = -pb.pcount[(c, r)][0]
            ov = -_overlap(csig[c], rsig[r])
            base[(c, r)] = (hit, ov) if params_first else (ov, hit)

    def entry(c, r, g):
        key = base[(c, r)]
        head = (key[0], -g, key[1]) if params_first else (-g,) + key
        return head + (c != r, c, r, g)

    heap = [entry(c, r, 0) for (c, r) in base]
    heapq.heapify(heap)
    gain = {}
    mapping, used = {}, set()
    while heap:
        *_, c, r, g = heapq.heappop(heap)
        if c in mapping or r in used or g != gain.get((c, r), 0):
            continue
        mapping[c] = r
        used.add(r)
        for e in incident[c]:
            other = e.dst.block if e.src.block == c else e.src.block
            if other == c or other not in incident or other in mapping:
                continue
            for r2 in pb.compat[other]:
                if r2 in used:
                    continue
                mapping[other] = r2
                key = pb.image(e, mapping)
                del mapping[other]
                if key in pb.ref_edges:
                    gain[(other, r2)] = gain.get((other, r2), 0) + 1
                    heapq.heappush(heap, entry(other, r2, gain[(other, r2)]))
    return mapping


def _improve(pb: _Problem, mapping, max_passes: int):
    """First-improvement local search: retarget, swap two targets, or drop a pair."""
    def total(m):
        return pb.total_of(pb.evaluate(m))

    best = total(mapping)
    for _ in range(max_passes):
        improved = False
        for c in pb.cnames:
            cur = mapping.get(c)
            owner_of = {y: x for x, y in mapping.items()}
            options = [(r, owner_of.get(r)) for r in pb.compat[c] if r != cur]
            if cur is not None:
                options.append((None, None))
            for r, owner in options:
                trial = dict(mapping)
                if owner is not None:
                    if cur is None:
                        del trial[owner]
                    else:
                        trial[owner] = cur  # same type as c, so compatible
                if r is None:
                    del trial[c]
                else:
                    trial[c] = r
                t = total(trial)
                if t > best + 1e-12:
                    mapping, best, improved = trial, t, True
                    break
        if not improved:
            break
    return mapping, best


def _greedy(pb: _Problem, max_passes: int = 20):
    csig, rsig = _signatures(pb.cand), _signatures(pb.ref)
    incident = {c: [] for c in pb.cnames}
    for e in pb.cand_conns:
        if isinstance(e.src, PortRef) and isinstance(e.dst, PortRef):
            for blk in {e.src.block, e.dst.block}:
                if blk in incident:
                    incident[blk].append(e)
    best_map, best = {}, -1.0
    # structure-first and parameter-first seeds; keep the better refined one
    for params_first in (False, True):
        m, t = _improve(pb, _construct(pb, csig, rsig, incident, params_first), max_passes)
        if t > best + 1e-12:
            best_map, best = m, t
    return best_map


def greedy_mapping(cand: SystemModel, ref: SystemModel, catalog: Optional[Catalog] = None,
                   weights: Optional[CompareWeights] = None) -> SimilarityReport:
    """Type-then-neighborhood greedy matching with a local improvement pass."""
    pb = _prepare(cand, ref, catalog, weights)
    return pb.report(_greedy(pb), "greedy")


def similarity(cand: SystemModel, ref: SystemModel, catalog: Optional[Catalog] = None,
               weights: Optional[CompareWeights] = None, method: str = "auto",
               max_blocks: int = BRUTE_FORCE_LIMIT) -> SimilarityReport:
    """Brute force when both models fit ``max_blocks`` (or when asked), else greedy."""
    if method not in ("auto", "bruteforce", "greedy"):
        raise ValueError(f"unknown comparison method {method!r}")
    if method == "greedy":
        return greedy_mapping(cand, ref, catalog, weights)
    pb = _prepare(cand, ref, catalog, weights)
    if method == "bruteforce" or max(pb.nc, pb.nr) <= max_blocks:
        if max(pb.nc, pb.nr) > max_blocks:
            raise SizeExceeded(f"exhaustive comparison is limited to {max_blocks} blocks")
        return pb.report(_bruteforce(pb), "bruteforce")
    return pb.report(_greedy(pb), "greedy")


def completeness(cand: SystemModel, ref: SystemModel, catalog: Optional[Catalog] = None,
                 report: Optional[SimilarityReport] = None) -> float:
    """Share of reference blocks that the mapping covers."""
    if report is None:
        report = similarity(cand, ref, catalog)
    n_ref = _resolve_model(ref, catalog).blocks
    if not n_ref:
        return 1.0
    return len(set(report.mapping.values())) / len(n_ref)


def weights_from_config(section: dict) -> CompareWeights:
    """Read ``w_block`` / ``w_conn`` / ``w_param`` from a config section."""
    unknown = set(section) - {"w_block", "w_conn", "w_param"}
    if unknown:
        raise ConfigError(f"unknown compare keys: {sorted(unknown)}")
    try:
        return CompareWeights(**{k: float(v) for k, v in section.items()})
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"bad compare weights: {exc}") from None
