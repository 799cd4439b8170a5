"""Regenerate the bundled diagram XML from the cooling-system start model.

The XML carries the layout, library-source and default-parameter entries a saved
diagram would, which is what makes it a fair input for the compression check.

    python scripts/make_xml_fixture.py [out.xml]
"""
import sys

from blockagent.catalog import default_catalog
from blockagent.emit import resolve_aliases
from blockagent.fixtures import data_path, fixture_model
from blockagent.ingest import render_model_xml


def main(argv):
    out = argv[1] if len(argv) > 1 else data_path("xml", "cooling_system.xml")
    cat = default_catalog()
    model = resolve_aliases(fixture_model("cooling_start"), cat)
    text = render_model_xml(model, cat, include_defaults=True, layout=True)
    with open(out, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(text)
    print(f"wrote {out}: {text.count(chr(10))} lines")


if __name__ == "__main__":
    main(sys.argv)
