from __future__ import annotations

import shutil
import struct
import subprocess
from pathlib import Path

import pytest

from metaffi import abi, cdt, plugin_abi
from metaffi.types import TYPE_NAMES

REPO_ROOT = Path(__file__).resolve().parent.parent


def test_record_formats_reproduce_documented_sizes():
    for layout in abi.RECORD_LAYOUTS:
        assert struct.calcsize(layout.format) == layout.size, layout.name


def test_record_sizes_match_runtime_constants():
    assert abi.CDT_LAYOUT.size == cdt.CDT_BYTE_SIZE == 24
    assert abi.CDTS_LAYOUT.size == cdt.CDTS_BYTE_SIZE == 24
    assert abi.XCALL_LAYOUT.size == cdt.XCALL_BYTE_SIZE == 16


def test_manifest_covers_all_24_type_constants():
    m = abi.manifest()
    by_name = {entry["name"]: entry for entry in m["types"]}
    assert set(by_name) == set(TYPE_NAMES)
    for name, constant in TYPE_NAMES.items():
        assert by_name[name]["value"] == int(constant)
        assert 1 << by_name[name]["bit"] == int(constant)
    bits = [entry["bit"] for entry in m["types"]]
    assert len(set(bits)) == 24  # one distinct bit each
    assert m["array_flag_bit"] == 63
    assert m["idl_input_types"] == {"source_code": 0, "path": 1}


def test_symbol_catalog_matches_the_loader():
    for kind, required in plugin_abi._REQUIRED_SYMBOLS.items():
        documented = [sym for sym, _ in abi.PLUGIN_SYMBOLS[kind]]
        for symbol in required:
            assert symbol in documented, (kind, symbol)
    # runtime_id is a data symbol, required by binding but not a callable
    assert abi.PLUGIN_SYMBOLS["runtime"][0][0] == "runtime_id"


def test_entrypoint_variant_table_matches_selector():
    for (has_params, has_rets), variant in abi.ENTRYPOINT_VARIANTS.items():
        picked = plugin_abi.select_entrypoint(int(has_params), int(has_rets))
        assert picked == variant


def test_checked_in_artifacts_are_current():
    # regeneration must be a no-op; rerun `python3 -m metaffi.abi` if not
    assert abi.check_artifacts(REPO_ROOT) == []


@pytest.mark.skipif(shutil.which("cc") is None, reason="no C compiler")
def test_header_compiles_and_static_asserts_hold(tmp_path):
    header = REPO_ROOT / "docs" / "abi" / "metaffi_types.h"
    tu = tmp_path / "check.c"
    tu.write_text(f'#include "{header}"\n', encoding="utf-8")
    proc = subprocess.run(
        ["cc", "-std=c11", "-Wall", "-Werror", "-fsyntax-only", str(tu)],
        capture_output=True,
        text=True,
    )
    assert proc.returncode == 0, proc.stderr
