#!/usr/bin/env python3
"""
Tests for document rendering, tables and the results journal
"""
import logging
import math
import os
import tempfile

import numpy as np

from config import RunConfig
from documents import file_digest, format_real, read_document, read_table, render_document, write_document, write_table
from errors import InputError, MissingDependencyError, ParseError
from journal import log_command, read_journal, verify_journal

logging.basicConfig(level=logging.WARNING)

SYMBOLS = os.path.join(os.path.dirname(os.path.abspath(__file__)), "symbol_files")


def test_format_real():
    assert format_real(0.1) == "0.10000000000000001"
    assert format_real(1.0) == "1"
    assert format_real(math.inf) == "inf"
    assert format_real(-math.inf) == "-inf"
    assert format_real(math.nan) == "nan"
    assert float(format_real(math.pi)) == math.pi


def test_render_keeps_order_and_layout():
    text = render_document({"b": 1, "a": [np.float64(0.5), True, None], "z": complex(1.0, -2.0), "e": math.nan})
    assert text.endswith("}\n")
    assert text.index('"b"') < text.index('"a"') < text.index('"z"')
    assert '\n  "a": [\n    0.5,\n    true,\n    null\n  ]' in text
    assert '"e": "nan"' in text
    assert '"re": 1' in text and '"im": -2' in text


def test_documents_round_trip_and_errors():
    with tempfile.TemporaryDirectory() as tmp:
        path = os.path.join(tmp, "nested", "doc.json")
        write_document(path, {"value": 0.25, "items": [1, 2]})
        assert read_document(path) == {"value": 0.25, "items": [1, 2]}

        try:
            read_document(os.path.join(tmp, "absent.json"))
        except MissingDependencyError as e:
            assert e.exit_code == 4
        else:
            raise AssertionError("a missing document is a missing dependency")

        broken = os.path.join(tmp, "broken.json")
        with open(broken, "w") as f:
            f.write('{\n  "a": 1,\n  "b": \n}\n')
        try:
            read_document(broken)
        except ParseError as e:
            assert e.line == 4
        else:
            raise AssertionError("malformed documents must be rejected")


def test_tables():
    with tempfile.TemporaryDirectory() as tmp:
        path = os.path.join(tmp, "table.tsv")
        write_table(path, {"symbol": "quartic", "L": 1.0}, ["t", "amplitude", "reliable"], [[0.5, 2.0, True], [1.0, math.inf, False]])
        with open(path) as f:
            text = f.read()
        assert text.startswith("# symbol: quartic\n# L: 1\nt\tamplitude\treliable\n")
        header, columns, rows = read_table(path)
        assert header == {"symbol": "quartic", "L": "1"}
        assert rows == [["0.5", "2", "1"], ["1", "inf", "0"]]


def test_journal_records_and_verifies():
    with tempfile.TemporaryDirectory() as out:
        config = RunConfig(symbol_path=os.path.join(SYMBOLS, "quartic.sym"), out_dir=out)
        path = write_document(os.path.join(out, "eval.json"), {"value": 1.0})
        entry = log_command("eval", config, [path])
        assert entry.output_digests == {"eval.json": file_digest(path)}
        assert entry.config_hash == config.config_hash() and entry.rss_mb > 0
        assert read_journal(out) == [entry]
        assert verify_journal(out) == []

        os.remove(path)
        assert verify_journal(out) == [{"file": "eval.json", "expected": entry.output_digests["eval.json"], "actual": None}]


def test_config_hash_ignores_output_directory():
    symbol = os.path.join(SYMBOLS, "quartic.sym")
    first = RunConfig(symbol_path=symbol, out_dir="a")
    assert first.config_hash() == RunConfig(symbol_path=symbol, out_dir="b").config_hash()
    assert first.config_hash() != RunConfig(symbol_path=symbol, seed=1).config_hash()
    for kwargs in ({"t": 0.0}, {"tol": 0.0}, {"method": "spline"}, {"t_min": 2.0}, {"small_points": 2}):
        try:
            RunConfig(symbol_path=symbol, **kwargs)
        except InputError:
            continue
        raise AssertionError(f"{kwargs} should be rejected")


def main():
    print("=" * 60)
    print("  Testing schrodecay documents and journal")
    print("=" * 60)
    tests = [
        test_format_real,
        test_render_keeps_order_and_layout,
        test_documents_round_trip_and_errors,
        test_tables,
        test_journal_records_and_verifies,
        test_config_hash_ignores_output_directory,
    ]
    for test in tests:
        print(f"\n🔍 {test.__name__}...")
        test()
        print("   ✅ passed")
    print("\n" + "=" * 60)
    print("✅ Document tests completed successfully!")
    print("=" * 60)


if __name__ == "__main__":
    main()
