import pytest
from hypothesis import given, settings

from blockagent.catalog import Catalog
from blockagent.emit import AddBlock, AddLine, emit_script, lint_script
from blockagent.errors import EmitError, IngestError, ParseError
from blockagent.fixtures import data_path, fixture_model, model_names
from blockagent.ingest import ingest_xml, parse_model_xml, read_model_xml, render_model_xml
from blockagent.ir import BlockInstance, ConservingLeft, PortRef, SignalPort, SystemModel, canonicalize
from blockagent.textio import emit_model_text, parse_model_text
from strategies import models

XML = """<System>
  <Block BlockType="Reference" Name="Convective Heat&#xA;Transfer" SID="2">
    <P Name="SourceBlock">fl_lib/Thermal/Thermal Elements/Convective Heat Transfer</P>
    <P Name="Position">[10, 20, 60, 80]</P>
    <P Name="ZOrder">4</P>
    <P Name="area">0.01</P>
  </Block>
  <Block BlockType="Constant" Name="Setpoint" SID="17"><P Name="Value">300</P></Block>
  <Block BlockType="Scope" Name="View" SID="28"/>
  <Block BlockType="Reference" Name="Mass" SID="5">
    <P Name="SourceBlock">fl_lib/Thermal/Thermal Elements/Thermal Mass</P>
  </Block>
  <Line><P Name="Src">17#out:1</P><P Name="Dst">28#in:1</P></Line>
  <Line><P Name="Src">2#rconn:1</P><P Name="Dst">5#lconn:1</P></Line>
</System>
"""


def test_xml_lines_become_connections():
    m = parse_model_xml(XML)
    conns = {(c.src, c.dst) for c in m.connections}
    assert (PortRef("Setpoint", SignalPort(1)), PortRef("View", SignalPort(1))) in conns


def test_xml_names_and_types():
    m = parse_model_xml(XML)
    blk = m.blocks["Convective Heat Transfer"]
    assert blk.type_name == "Convective Heat Transfer"
    assert blk.params == {"area": 0.01}  # layout nodes dropped
    assert m.blocks["Setpoint"].type_name == "Constant"
    assert m.blocks["Setpoint"].params == {"Value": 300}


def test_xml_conserving_lines():
    m = parse_model_xml(XML)
    c = [c for c in m.connections if c.src.block == "Convective Heat Transfer"][0]
    assert c.dst == PortRef("Mass", ConservingLeft(1))


def test_xml_without_lines():
    m = parse_model_xml('<System><Block BlockType="Scope" Name="S" SID="1"/></System>')
    assert m.connections == ()


def test_xml_unknown_sid():
    with pytest.raises(IngestError):
        parse_model_xml('<System><Block BlockType="Scope" Name="S" SID="1"/>'
                        '<Line><P Name="Src">9#out:1</P><P Name="Dst">1#in:1</P></Line></System>')


def test_xml_duplicate_name():
    with pytest.raises(IngestError):
        parse_model_xml('<System><Block BlockType="Scope" Name="S" SID="1"/>'
                        '<Block BlockType="Scope" Name="S" SID="2"/></System>')


def test_xml_malformed_reports_location():
    with pytest.raises(IngestError, match="line 1"):
        parse_model_xml("<System><Block></System>")


def test_xml_slash_in_name_is_renamed():
    res = ingest_xml('<System><Block BlockType="Scope" Name="a/b" SID="1"/></System>')
    assert list(res.model.blocks) == ["a∕b"]
    assert res.remarks


def test_bundled_xml_fixture_matches_model(catalog):
    from blockagent.emit import resolve_aliases

    res = read_model_xml(data_path("xml", "cooling_system.xml"))
    want = canonicalize(resolve_aliases(fixture_model("cooling_start"), catalog))
    assert res.model.connections == want.connections
    assert list(res.model.blocks) == list(want.blocks)
    # the saved diagram also spells out catalog defaults; the IR values win where given
    for name, blk in want.blocks.items():
        got = res.model.blocks[name]
        assert got.type_name == blk.type_name
        assert {k: got.params[k] for k in blk.params} == dict(blk.params)


def test_text_round_trip_on_fixtures():
    for name in model_names():
        text = data_path("models", f"{name}.json").read_text(encoding="utf-8")
        m = parse_model_text(text)
        assert parse_model_text(emit_model_text(m)) == m
        c = canonicalize(m)
        assert emit_model_text(parse_model_text(emit_model_text(c))) == emit_model_text(c)


def test_text_missing_connections_key():
    m = parse_model_text('{"Blocks": {"G": {"Type": "Gain"}}}')
    assert m.connections == ()
    assert emit_model_text(m).count('"Connections": []') == 1


def test_text_duplicate_block_key():
    with pytest.raises(ParseError) as exc:
        parse_model_text('{"Blocks": {"G": {"Type": "Gain"},\n "G": {"Type": "Sum"}}, "Connections": []}')
    assert exc.value.line == 2


def test_text_malformed_has_location():
    with pytest.raises(ParseError) as exc:
        parse_model_text('{"Blocks": {"G": {"Type": "Gain"}\n')
    assert exc.value.line is not None and exc.value.column is not None


def test_text_accepts_assignment_prefix():
    m = parse_model_text('sys_dict = {"Blocks": {"G": {"Type": "Gain", "Gain": 2}}, "Connections": []}')
    assert m.blocks["G"].params == {"Gain": 2}


@settings(max_examples=500, deadline=None)
@given(models())
def test_text_round_trip_property(m):
    assert parse_model_text(emit_model_text(m)) == m


def test_emit_temperature_sensor_commands(catalog):
    s = emit_script(canonicalize(fixture_model("cooling_final")), catalog, "cooling").render()
    assert ("add_block('fl_lib/Thermal/Thermal Sensors/Temperature Sensor', 'cooling/Temperature Sensor', "
            "'Temperature_measure', 'Absolute');") in s
    assert "add_line('cooling', 'Temperature Sensor/RConn2', 'PS-Simulink Converter/LConn1', 'autorouting', 'on');" in s
    lines = s.splitlines()
    assert lines[0].startswith("%") and lines[-1].startswith("% Simulink.BlockDiagram.arrangeSystem")
    assert "\r" not in s


def test_emit_empty_model(catalog):
    assert len(emit_script(SystemModel(), catalog, "m")) == 0


def test_emit_unknown_type(catalog):
    with pytest.raises(EmitError):
        emit_script(SystemModel({"X": BlockInstance("Warp Drive")}), catalog, "m")


def test_emit_resolves_aliases(catalog):
    s = emit_script(canonicalize(fixture_model("opamp_rebuilt")), catalog, "opamp").render()
    assert "/-'" not in s and "/+'" not in s


def test_emit_deterministic_and_linted(catalog):
    for name in ("cooling_final", "pmsg_final", "rc_filter", "opamp_original", "signal_chain"):
        m = canonicalize(fixture_model(name))
        a = emit_script(m, catalog, name)
        b = emit_script(canonicalize(fixture_model(name)), catalog, name)
        assert a.render() == b.render()
        assert lint_script(a) == []
        n_blocks = sum(isinstance(c, AddBlock) for c in a.commands)
        n_lines = sum(isinstance(c, AddLine) for c in a.commands)
        assert n_blocks >= len(m.blocks) and n_lines >= 1


def test_emit_diff_mode_only_adds_new(catalog):
    start, final = canonicalize(fixture_model("cooling_start")), canonicalize(fixture_model("cooling_final"))
    diff = emit_script(final, catalog, "cooling", existing=start)
    added = [c.path for c in diff.commands if isinstance(c, AddBlock)]
    assert added == ["cooling/PS-Simulink Converter", "cooling/Temperature Sensor"]
    assert lint_script(diff, preexisting=list(start.blocks)) == []


def test_lint_catches_missing_block():
    from blockagent.emit import CommandScript

    bad = CommandScript("m", (AddLine("m", "A/1", "B/1"),))
    assert len(lint_script(bad)) == 2


def test_xml_render_round_trip(catalog):
    from blockagent.emit import resolve_aliases

    for name in ("signal_chain", "rc_filter", "cooling_final"):
        m = canonicalize(resolve_aliases(fixture_model(name), catalog))
        assert parse_model_xml(render_model_xml(m, catalog)) == m


def test_compression_on_bundled_xml():
    from blockagent.ir import estimate_tokens

    text = data_path("xml", "cooling_system.xml").read_text(encoding="utf-8")
    m = parse_model_xml(text.encode("utf-8"))
    assert estimate_tokens(emit_model_text(m)) / estimate_tokens(text) <= 0.15


def test_empty_catalog_cannot_emit():
    with pytest.raises(EmitError):
        emit_script(SystemModel({"G": BlockInstance("Gain")}), Catalog(), "m")
