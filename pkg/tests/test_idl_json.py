from __future__ import annotations

import json
import random
from pathlib import Path

import pytest

from metaffi import types as t
from metaffi.idl import (
    ArgDefinition,
    FunctionDefinition,
    IDLDefinition,
    IdlError,
    ModuleDefinition,
    idl_from_json,
    idl_to_json,
)

from generators import random_idl

FIXTURES = Path(__file__).parent / "fixtures" / "idl_invalid"


def minimal() -> IDLDefinition:
    i64 = t.MetaFFITypeInfo(t.INT64)
    add = FunctionDefinition(
        Name="add",
        FunctionPath="callable=add",
        Parameters=[ArgDefinition(Name="x", Type=i64), ArgDefinition(Name="y", Type=i64)],
        ReturnValues=[ArgDefinition(Name="sum", Type=i64)],
    )
    return IDLDefinition(
        IDLSource="m.tabular",
        IDLExtension=".tabular",
        IDLFileNameWithExtension="m.tabular",
        IDLFullPath="/opt/idl/m.tabular",
        MetaFFIGuestLib="m.tabular",
        Modules=[ModuleDefinition(Name="m", Functions=[add])],
    )


def test_round_trip_identity_small():
    tree = minimal()
    text = idl_to_json(tree)
    assert idl_from_json(text) == tree


def test_serialization_is_deterministic():
    assert idl_to_json(minimal()) == idl_to_json(minimal())


def test_serialized_form_is_readable_json():
    doc = json.loads(idl_to_json(minimal()))
    fn = doc["Modules"][0]["Functions"][0]
    assert fn["Name"] == "add"
    assert fn["Parameters"][0]["Type"]["StringType"] == "int64"
    assert fn["Parameters"][0]["Type"]["Type"] == int(t.INT64)


def test_round_trip_identity_randomized():
    rng = random.Random(0x1D2)
    for i in range(300):
        tree = random_idl(rng)
        text = idl_to_json(tree)
        back = idl_from_json(text)
        assert back == tree, f"tree {i} changed across the round trip"
        assert idl_to_json(back) == text, f"tree {i} serialization unstable"


def test_empty_modules_document_round_trips():
    tree = IDLDefinition(
        IDLSource="x", IDLExtension=".x", IDLFileNameWithExtension="x.x",
        IDLFullPath="/x", MetaFFIGuestLib="x",
    )
    assert idl_from_json(idl_to_json(tree)) == tree


def test_loaded_tree_has_parent_links():
    rng = random.Random(5)
    tree = random_idl(rng)
    while not any(m.Classes for m in tree.Modules):
        tree = random_idl(rng)
    back = idl_from_json(idl_to_json(tree))
    for module in back.Modules:
        for cls in module.Classes:
            assert all(c.parent is cls for c in cls.Constructors)
            assert all(m.parent is cls for m in cls.Methods)
            assert all(f.parent is cls for f in cls.Fields)


def test_invalid_json_is_reported_as_such():
    with pytest.raises(IdlError, match="invalid JSON"):
        idl_from_json("{not json")


def test_root_must_be_an_object():
    with pytest.raises(IdlError, match="document root"):
        idl_from_json("[]")


def test_unknown_top_level_key_rejected():
    doc = json.loads(idl_to_json(minimal()))
    doc["Extra"] = 1
    with pytest.raises(IdlError, match="Extra"):
        idl_from_json(json.dumps(doc))


def test_empty_alias_rejected_with_path():
    doc = json.loads(idl_to_json(minimal()))
    doc["Modules"][0]["Functions"][0]["Parameters"][0]["Type"]["Alias"] = ""
    with pytest.raises(IdlError, match=r"Modules\[0\].Functions\[0\].Parameters\[0\].Type.Alias"):
        idl_from_json(json.dumps(doc))


def test_array_name_requires_dimensions():
    doc = json.loads(idl_to_json(minimal()))
    info = doc["Modules"][0]["Functions"][0]["Parameters"][0]["Type"]
    info["StringType"] = "int64_array"
    info["Type"] = int(t.INT64 | t.ARRAY)
    with pytest.raises(IdlError, match="requires Dimensions > 0"):
        idl_from_json(json.dumps(doc))


EXPECTED_PATHS = {
    "missing_function_name": "Modules[0].Functions[0].Name",
    "missing_idl_source": "IDLSource",
    "modules_not_a_list": "Modules",
    "negative_overload_index": "Modules[0].Functions[0].OverloadIndex",
    "dimensions_disagree_with_type": "Modules[0].Functions[0].Parameters[0]",
    "numeric_type_contradicts_name": "Modules[0].Functions[0].Parameters[0].Type",
    "constructor_returns_no_handle": "Modules[0].Classes[0].Constructors[0]",
    "global_without_accessors": "Modules[0].Globals[0]",
    "global_getter_takes_parameters": "Modules[0].Globals[0].Getter",
    "duplicate_function_overload": "Modules[0].Functions[1]",
}


@pytest.mark.parametrize("name", sorted(EXPECTED_PATHS))
def test_invalid_fixture_cites_the_offending_path(name):
    text = (FIXTURES / f"{name}.json").read_text(encoding="utf-8")
    with pytest.raises(IdlError) as excinfo:
        idl_from_json(text)
    assert EXPECTED_PATHS[name] in str(excinfo.value)


def test_fixture_directory_is_exactly_the_curated_set():
    names = sorted(p.stem for p in FIXTURES.glob("*.json"))
    assert names == sorted(EXPECTED_PATHS)
