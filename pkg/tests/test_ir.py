import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from blockagent.errors import ExpandError, MergeConflict, ParseError
from blockagent.ir import (
    BlockInstance,
    ConservingLeft,
    ConservingRight,
    Connection,
    MultiPortRef,
    NamedAlias,
    PortRef,
    Quantity,
    SignalPort,
    SystemModel,
    canonicalize,
    estimate_tokens,
    expand_connection,
    merge,
    parse_endpoint,
    parse_port_ref,
    render_port_ref,
)
from strategies import models, names, port_ids


def test_parse_signal_port():
    assert parse_port_ref("Pump Control/2") == PortRef("Pump Control", SignalPort(2))


def test_parse_conserving_port():
    assert parse_port_ref("Fuel Cell Stack/LConn1") == PortRef("Fuel Cell Stack", ConservingLeft(1))
    assert parse_port_ref("Temperature Sensor/RConn2") == PortRef("Temperature Sensor", ConservingRight(2))


def test_parse_alias_port():
    assert parse_port_ref("AC Voltage Source/-") == PortRef("AC Voltage Source", NamedAlias("-"))


@pytest.mark.parametrize("text", ["/1", "Gain/", "Gain", "Gain/0", "Gain/LConn0", "a/b/c"])
def test_parse_port_ref_errors(text):
    with pytest.raises(ParseError):
        parse_port_ref(text)


def test_parse_port_ref_known_blocks_disambiguates_slash():
    # a greedy match against known names settles an extra '/'
    ref = parse_port_ref("a/b/c", known_blocks=["a/b"])
    assert ref == PortRef("a/b", NamedAlias("c"))


def test_port_list_endpoint():
    ref = parse_endpoint("PMSG/(LConn1,LConn2,LConn3)")
    assert ref == MultiPortRef("PMSG", (ConservingLeft(1), ConservingLeft(2), ConservingLeft(3)))
    with pytest.raises(ParseError):
        parse_port_ref("PMSG/(LConn1,LConn2)")


def test_expand_three_wide():
    c = Connection(parse_endpoint("PMSG/(LConn1,LConn2,LConn3)"), parse_endpoint("Conv/(LConn1,LConn2,LConn3)"))
    out = expand_connection(c)
    assert [(render_port_ref(e.src), render_port_ref(e.dst)) for e in out] == [
        ("PMSG/LConn1", "Conv/LConn1"), ("PMSG/LConn2", "Conv/LConn2"), ("PMSG/LConn3", "Conv/LConn3")]


def test_expand_single_is_identity():
    c = Connection(parse_port_ref("A/1"), parse_port_ref("B/1"))
    assert expand_connection(c) == [c]


def test_expand_length_mismatch():
    c = Connection(parse_endpoint("A/(LConn1,LConn2)"), parse_endpoint("B/(LConn1,LConn2,LConn3)"))
    with pytest.raises(ExpandError):
        expand_connection(c)


def test_expand_no_broadcast():
    c = Connection(parse_endpoint("A/LConn1"), parse_endpoint("B/(LConn1,LConn2)"))
    with pytest.raises(ExpandError):
        expand_connection(c)


def _chain():
    blocks = {"Src": BlockInstance("Constant", {"Value": 1}), "G": BlockInstance("Gain", {"Gain": 2.0}),
              "Out": BlockInstance("Scope")}
    conns = [Connection(parse_port_ref("Src/1"), parse_port_ref("G/1")),
             Connection(parse_port_ref("G/1"), parse_port_ref("Out/1"))]
    return SystemModel(blocks, conns)


def test_canonicalize_sorts_and_dedups():
    m = _chain()
    dup = m.replace(connections=m.connections + (m.connections[0],))
    c = canonicalize(dup)
    assert list(c.blocks) == ["G", "Out", "Src"]
    assert len(c.connections) == 2
    assert [render_port_ref(x.src) for x in c.connections] == ["G/1", "Src/1"]
    assert canonicalize(c) == c


def test_canonicalize_expands_port_lists():
    # hand-expanded and sorted: (A/LConn1, B/RConn1) < (A/LConn2, ...) < (A/LConn3, ...)
    m = SystemModel({"A": BlockInstance("X"), "B": BlockInstance("Y")},
                    [Connection(parse_endpoint("A/(LConn3,LConn1,LConn2)"), parse_endpoint("B/(RConn3,RConn1,RConn2)"))])
    c = canonicalize(m)
    assert [(str(x.src), str(x.dst)) for x in c.connections] == [
        ("A/LConn1", "B/RConn1"), ("A/LConn2", "B/RConn2"), ("A/LConn3", "B/RConn3")]


def test_canonicalize_keeps_unexpandable_port_list():
    m = SystemModel({"A": BlockInstance("X")},
                    [Connection(parse_endpoint("A/(LConn1,LConn2)"), parse_endpoint("A/(RConn1)"))])
    assert canonicalize(m).connections == m.connections


def test_merge_identity_and_dedup():
    m = canonicalize(_chain())
    assert merge(m, SystemModel()) == m
    src = {"AC Voltage Source": BlockInstance("AC Voltage Source", {"Amplitude": 100})}
    a = SystemModel({**src, "D1": BlockInstance("Diode")})
    b = SystemModel({**src, "D2": BlockInstance("Diode")})
    out = merge(a, b)
    assert list(out.blocks) == ["AC Voltage Source", "D1", "D2"]


def test_merge_conflict_names_block():
    a = SystemModel({"X": BlockInstance("Gain")})
    b = SystemModel({"X": BlockInstance("Constant")})
    with pytest.raises(MergeConflict) as exc:
        merge(a, b)
    assert exc.value.block == "X"
    with pytest.raises(MergeConflict):
        merge(a, SystemModel({"X": BlockInstance("Gain", {"Gain": 3})}))


def test_estimate_tokens_examples():
    assert estimate_tokens("") == 0
    # hand count: add_block ( ' x ' )
    assert estimate_tokens("add_block('x')") == 6
    assert estimate_tokens('{"Type": "Gain"}') == 9


def test_invalid_values_rejected():
    with pytest.raises(ValueError):
        BlockInstance("")
    with pytest.raises(ValueError):
        BlockInstance("Gain", {"Gain": float("nan")})
    with pytest.raises(ValueError):
        SystemModel({"a/b": BlockInstance("Gain")})
    with pytest.raises(ValueError):
        BlockInstance("Gain", inner=SystemModel())
    with pytest.raises(ValueError):
        Quantity(float("inf"), "K")
    with pytest.raises(ValueError):
        SignalPort(0)


def test_models_are_immutable():
    m = _chain()
    with pytest.raises(Exception):
        m.blocks = {}
    with pytest.raises(Exception):
        m.connections[0].src = None


@settings(max_examples=200, deadline=None)
@given(models(canonical=False))
def test_canonicalize_idempotent(m):
    c = canonicalize(m)
    assert canonicalize(c) == c


@settings(max_examples=150, deadline=None)
@given(models(), models())
def test_merge_commutative(a, b):
    try:
        ab = merge(a, b)
    except MergeConflict:
        with pytest.raises(MergeConflict):
            merge(b, a)
        return
    assert canonicalize(ab) == canonicalize(merge(b, a))


@settings(max_examples=300, deadline=None)
@given(names, port_ids)
def test_port_ref_round_trip(block, port):
    ref = PortRef(block, port)
    assert parse_port_ref(render_port_ref(ref)) == ref


@settings(max_examples=300, deadline=None)
@given(st.text(max_size=60), st.text(max_size=60))
def test_estimate_tokens_subadditive(a, b):
    assert estimate_tokens(a + b) <= estimate_tokens(a) + estimate_tokens(b) + 1
