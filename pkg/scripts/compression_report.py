"""Token counts of an XML model file against its IR text.

Usage: python scripts/compression_report.py [model.xml ...]
(defaults to the bundled cooling-system XML)
"""
import pathlib
import sys
import time

sys.path.insert(0, str(pathlib.Path(__file__).resolve().parents[1] / "src"))
from blockagent.fixtures import data_path  # noqa: E402
from blockagent.ingest import ingest_xml  # noqa: E402
from blockagent.ir import estimate_tokens  # noqa: E402
from blockagent.textio import emit_model_text  # noqa: E402


def report(path):
    raw = pathlib.Path(path).read_bytes()
    t0 = time.perf_counter()
    res = ingest_xml(raw)
    ir = emit_model_text(res.model)
    took = time.perf_counter() - t0
    text = raw.decode("utf-8")
    src, dst = estimate_tokens(text), estimate_tokens(ir)
    print(f"{path}")
    print(f"  XML: {len(text.splitlines())} lines, {src} tokens")
    print(f"  IR:  {len(ir.splitlines())} lines, {dst} tokens, "
          f"{len(res.model.blocks)} blocks, {len(res.model.connections)} connections")
    print(f"  ratio {dst / src:.4f}  ({took * 1000:.1f} ms)")


def main(argv):
    for p in argv or [data_path("xml", "cooling_system.xml")]:
        report(p)


if __name__ == "__main__":
    main(sys.argv[1:])
