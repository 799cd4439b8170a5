import json

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from blockagent.catalog import catalog_from_json, load_catalog, resolve_port
from blockagent.errors import LoadError, NotFound
from blockagent.ir import ConservingLeft, NamedAlias, SignalPort


def test_empty_file_gives_empty_catalog(tmp_path):
    p = tmp_path / "empty.json"
    p.write_text("")
    assert len(load_catalog(p)) == 0


def test_duplicate_type_is_rejected():
    rec = {"type": "Diode", "library_path": "fl_lib/Electrical/Diode"}
    with pytest.raises(LoadError):
        catalog_from_json(json.dumps({"version": 1, "blocks": [rec, rec]}))


def test_malformed_catalog_is_rejected(tmp_path):
    p = tmp_path / "bad.json"
    p.write_text("[{")
    with pytest.raises(LoadError):
        load_catalog(p)
    with pytest.raises(LoadError):
        load_catalog(tmp_path / "missing.json")


def test_bundled_catalog_resolves_case_study_blocks(catalog):
    for t in ("Temperature Sensor", "Solver Configuration", "AC Voltage Source", "Permanent Magnet Synchronous Machine",
              "Three-Level NPC Converter", "Op-Amp", "Diode", "PS-Simulink Converter"):
        assert catalog.resolve_type(t).type_name == t


def test_search_temperature_sensor(catalog):
    (hits,) = catalog.search_blocks(["Temperature Sensor"])
    assert hits[0].type_name == "Temperature Sensor"
    assert "Thermal Sensors" in hits[0].library_path
    assert len(hits) <= 3


def test_search_by_alias(catalog):
    (hits,) = catalog.search_blocks(["PMSG"])
    assert hits[0].type_name == "Permanent Magnet Synchronous Machine"


def test_search_no_match(catalog):
    assert catalog.search_blocks(["zzzz-nonexistent"]) == [[]]


def test_search_lib_filter(catalog):
    (hits,) = catalog.search_blocks(["machine"], lib="sps_lib")
    assert hits and all(h.top_library == "sps_lib" or h.library_path.startswith("sps_lib") for h in hits)
    (none,) = catalog.search_blocks(["Temperature Sensor"], lib="sps_lib")
    assert all("Temperature" not in h.type_name for h in none)


def test_resolve_type_path_suggests_type(catalog):
    with pytest.raises(NotFound) as exc:
        catalog.resolve_type("simscape/Foundation/Temperature Sensors/Temperature Sensor")
    assert exc.value.suggestions[0] == "Temperature Sensor"
    assert len(exc.value.suggestions) == 3
    with pytest.raises(NotFound):
        catalog.resolve_type("")


def test_resolve_port(catalog):
    ac = catalog.get("AC Voltage Source")
    neg = resolve_port(ac, NamedAlias("-"))
    assert neg.alias == "-" and neg.domain == "electrical"
    assert resolve_port(ac, ConservingLeft(1)).alias == "+"
    with pytest.raises(NotFound):
        resolve_port(catalog.get("Gain"), SignalPort(9))


def test_signal_index_resolved_by_role(catalog):
    g = catalog.get("Gain")
    assert resolve_port(g, SignalPort(1), "src").domain == "signal-out"
    assert resolve_port(g, SignalPort(1), "dst").domain == "signal-in"


def test_every_alias_resolves(catalog):
    for d in catalog:
        for p in d.ports:
            if p.alias:
                assert resolve_port(d, NamedAlias(p.alias)) is not None


@settings(max_examples=200, deadline=None)
@given(st.lists(st.text(alphabet="abcdefghijklmnopqrstuvwxyz ", min_size=1, max_size=20), min_size=1, max_size=3))
def test_search_only_returns_members_and_is_stable(catalog, queries):
    a = catalog.search_blocks(queries)
    assert a == catalog.search_blocks(queries)
    for hits in a:
        for h in hits:
            assert catalog.resolve_type(h.type_name) is h
