import itertools

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from blockagent.compare import (
    CompareWeights,
    completeness,
    greedy_mapping,
    optimal_mapping_bruteforce,
    similarity,
)
from blockagent.errors import ConfigError, SizeExceeded
from blockagent.fixtures import fixture_model, model_names
from blockagent.ir import BlockInstance, Connection, SystemModel, canonicalize, is_conserving, parse_port_ref
from blockagent.randmodels import comparison_pairs, random_model


def conn(a, b):
    return Connection(parse_port_ref(a), parse_port_ref(b))


def three_chain():
    return SystemModel({"Source": BlockInstance("Constant", {"Value": 1}), "Gain": BlockInstance("Gain", {"Gain": 4}),
                        "Scope": BlockInstance("Scope")},
                       [conn("Source/1", "Gain/1"), conn("Gain/1", "Scope/1")])


# -- independent oracle: enumerate every mapping and score it from scratch -------

def _key(c, name_of):
    a = (name_of(c.src.block), str(c.src.port))
    b = (name_of(c.dst.block), str(c.dst.port))
    if is_conserving(c.src.port) and is_conserving(c.dst.port):
        return frozenset([a, b])
    return (a, b)


def oracle_total(cand, ref):
    cand, ref = canonicalize(cand), canonicalize(ref)
    cn, rn = sorted(cand.blocks), sorted(ref.blocks)
    ref_edges = {_key(c, lambda b: b) for c in ref.connections}
    cand_edges = {_key(c, lambda b: ("cand", b)) for c in cand.connections}
    n_params = sum(len(b.params) for b in ref.blocks.values())
    best = 0.0
    for k in range(0, min(len(cn), len(rn)) + 1):
        for cs in itertools.combinations(cn, k):
            for rs in itertools.permutations(rn, k):
                m = dict(zip(cs, rs))
                if any(cand.blocks[c].type_name != ref.blocks[r].type_name for c, r in m.items()):
                    continue
                hits = set()
                for c in cand.connections:
                    ends = (c.src.block, c.dst.block)
                    if any(e in cand.blocks and e not in m for e in ends):
                        continue
                    if any(e not in cand.blocks and e in ref.blocks for e in ends):
                        continue
                    key = _key(c, lambda b: m.get(b, b))
                    if key in ref_edges:
                        hits.add(key)
                bf1 = 2 * k / (len(cn) + len(rn))
                if cand_edges or ref_edges:
                    cf1 = 2 * len(hits) / (len(cand_edges) + len(ref_edges))
                else:
                    cf1 = 1.0 if k else 0.0
                if n_params:
                    pm = sum(1 for c, r in m.items() for p, v in ref.blocks[r].params.items()
                             if cand.blocks[c].params.get(p) == v) / n_params
                else:
                    pm = 1.0 if k else 0.0
                best = max(best, 0.4 * bf1 + 0.4 * cf1 + 0.2 * pm)
    return best


def test_bruteforce_matches_enumeration_oracle():
    pairs = comparison_pairs(seed=77, n_pairs=60, max_blocks=5)
    for cand, ref in pairs:
        got = optimal_mapping_bruteforce(cand, ref).total
        assert got == pytest.approx(oracle_total(cand, ref), abs=1e-12)


def test_self_similarity_chain():
    m = three_chain()
    rep = optimal_mapping_bruteforce(m, m)
    assert rep.total == 1.0
    assert rep.mapping == {n: n for n in m.blocks}


def test_empty_candidate():
    assert optimal_mapping_bruteforce(SystemModel(), three_chain()).total == 0.0
    assert completeness(SystemModel(), three_chain()) == 0.0


def test_missing_leaf_block():
    full, part = fixture_model("signal_chain"), fixture_model("signal_chain_partial")
    rep = optimal_mapping_bruteforce(part, full)
    assert rep.block_f1 == pytest.approx(6 / 7)
    assert rep.connection_f1 == pytest.approx(4 / 5)
    assert rep.param_match == 1.0
    # 0.4 * 6/7 + 0.4 * 4/5 + 0.2 * 1
    assert rep.total == pytest.approx(0.862857142857143, abs=1e-12)
    assert rep.total == pytest.approx(oracle_total(part, full), abs=1e-12)
    assert completeness(part, full) == 0.75
    assert completeness(full, full) == 1.0


def test_size_bound():
    big = random_model(np.random.default_rng(0), 9)
    with pytest.raises(SizeExceeded):
        optimal_mapping_bruteforce(big, big)
    assert similarity(big, big).method == "greedy"
    assert optimal_mapping_bruteforce(big, big, max_blocks=9).total == 1.0


def test_greedy_identical_and_disjoint():
    m = three_chain()
    assert greedy_mapping(m, m).total == 1.0
    other = SystemModel({"R": BlockInstance("Resistor"), "Cap": BlockInstance("Capacitor")}, [conn("R/RConn1", "Cap/LConn1")])
    rep = greedy_mapping(m, other)
    assert rep.block_f1 == 0.0 and rep.mapping == {}


def test_greedy_close_to_optimum():
    for cand, ref in comparison_pairs(seed=5, n_pairs=100, max_blocks=6):
        opt = optimal_mapping_bruteforce(cand, ref).total
        assert greedy_mapping(cand, ref).total >= 0.9 * opt - 1e-12


def test_conserving_connections_are_undirected():
    a = SystemModel({"R": BlockInstance("Resistor"), "Cap": BlockInstance("Capacitor")}, [conn("R/RConn1", "Cap/LConn1")])
    b = SystemModel({"R": BlockInstance("Resistor"), "Cap": BlockInstance("Capacitor")}, [conn("Cap/LConn1", "R/RConn1")])
    assert similarity(a, b).connection_f1 == 1.0
    s1 = SystemModel({"G": BlockInstance("Gain"), "H": BlockInstance("Gain")}, [conn("G/1", "H/1")])
    s2 = SystemModel({"G": BlockInstance("Gain"), "H": BlockInstance("Gain")}, [conn("H/1", "G/1")])
    # signal wiring keeps its direction; relabelling G<->H still recovers it
    assert similarity(s1, s2).total == 1.0


def test_wiring_without_blocks_earns_nothing():
    ref = three_chain()
    ghost = SystemModel({}, ref.connections)
    assert similarity(ghost, ref).total == 0.0
    # a name dangling in both models still matches literally
    dangling = ref.replace(connections=ref.connections + (conn("Gain/1", "Missing/1"),))
    assert similarity(dangling, dangling).total == 1.0


def test_extra_candidate_params_ignored():
    ref = three_chain()
    cand = ref.replace(blocks={**ref.blocks, "Scope": BlockInstance("Scope", {"Extra": 1})})
    assert similarity(cand, ref).total == 1.0


def test_self_similarity_on_fixtures(catalog):
    for name in model_names():
        m = fixture_model(name)
        assert similarity(m, m, catalog, max_blocks=6).total == 1.0


def test_catalog_resolves_aliases_before_comparing(catalog):
    a = SystemModel({"V": BlockInstance("AC Voltage Source"), "R": BlockInstance("Resistor")}, [conn("V/-", "R/+")])
    b = SystemModel({"V": BlockInstance("AC Voltage Source"), "R": BlockInstance("Resistor")}, [conn("V/RConn1", "R/LConn1")])
    assert similarity(a, b, catalog).total == 1.0
    assert similarity(a, b).connection_f1 == 0.0


def test_weights():
    full, part = fixture_model("signal_chain"), fixture_model("signal_chain_partial")
    rep = similarity(part, full, weights=CompareWeights(1.0, 0.0, 0.0))
    assert rep.total == pytest.approx(6 / 7)
    with pytest.raises(ConfigError):
        CompareWeights(0, 0, 0)
    with pytest.raises(ConfigError):
        CompareWeights(-1, 1, 1)


def test_report_record():
    rec = similarity(three_chain(), three_chain()).to_record()
    assert set(rec) == {"block_f1", "connection_f1", "param_match", "total", "mapped", "method"}


pair_index = st.integers(0, 199)
_PAIRS = comparison_pairs(seed=11, n_pairs=200, max_blocks=6)


@settings(max_examples=80, deadline=None)
@given(pair_index)
def test_block_f1_symmetric(i):
    a, b = _PAIRS[i]
    assert optimal_mapping_bruteforce(a, b).block_f1 == pytest.approx(optimal_mapping_bruteforce(b, a).block_f1)


@settings(max_examples=80, deadline=None)
@given(pair_index, st.integers(0, 10))
def test_spoiling_a_parameter_never_helps(i, pick):
    cand, ref = _PAIRS[i]
    slots = [(n, p) for n, b in sorted(cand.blocks.items()) for p in sorted(b.params)]
    if not slots:
        return
    name, param = slots[pick % len(slots)]
    blk = cand.blocks[name]
    spoiled = cand.replace(blocks={**cand.blocks, name: BlockInstance(blk.type_name, {**blk.params, param: "zz-none"})})
    assert optimal_mapping_bruteforce(spoiled, ref).total <= optimal_mapping_bruteforce(cand, ref).total + 1e-12


@settings(max_examples=80, deadline=None)
@given(pair_index)
def test_scores_in_unit_interval(i):
    cand, ref = _PAIRS[i]
    for rep in (optimal_mapping_bruteforce(cand, ref), greedy_mapping(cand, ref)):
        for v in (rep.block_f1, rep.connection_f1, rep.param_match, rep.total):
            assert 0.0 <= v <= 1.0
        # injective and type-preserving
        assert len(set(rep.mapping.values())) == len(rep.mapping)
        for c, r in rep.mapping.items():
            assert cand.blocks[c].type_name == ref.blocks[r].type_name
