from __future__ import annotations

import pytest

from metaffi import types as t
from metaffi.types import (
    MetaFFITypeInfo,
    MetaFFITypes,
    TYPE_NAMES,
    UnknownTypeName,
    base_type,
    constant_to_type_name,
    is_array_type,
    type_name_to_constant,
)


def test_normative_anchors():
    assert int(t.FLOAT64) == 1
    assert int(t.ARRAY) == 1 << 63


def test_exactly_24_distinct_single_bit_constants():
    values = [int(v) for v in TYPE_NAMES.values()]
    assert len(values) == 24
    assert len(set(values)) == 24  # injective
    for value in values:
        assert value != 0 and value & (value - 1) == 0  # one bit each


def test_name_lookup_examples():
    assert type_name_to_constant("float32") is t.FLOAT32
    assert type_name_to_constant("handle") is t.HANDLE
    assert type_name_to_constant("int64_array") == t.INT64 | t.ARRAY


def test_name_lookup_unknown_names_offending_token():
    with pytest.raises(UnknownTypeName, match="no_such_type"):
        type_name_to_constant("no_such_type")


@pytest.mark.parametrize("name", sorted(TYPE_NAMES))
def test_name_constant_roundtrip(name):
    assert constant_to_type_name(type_name_to_constant(name)) == name


@pytest.mark.parametrize("name", sorted(set(TYPE_NAMES) - {"array"}))
def test_array_suffix_roundtrip(name):
    tag = type_name_to_constant(name + "_array")
    assert is_array_type(tag)
    assert base_type(tag) is TYPE_NAMES[name]
    assert constant_to_type_name(tag) == name + "_array"


def test_base_type_of_bare_array_flag():
    assert base_type(t.ARRAY) is t.ARRAY


def test_type_info_requires_array_flag_for_dimensions():
    MetaFFITypeInfo(t.INT64 | t.ARRAY, dimensions=2)
    MetaFFITypeInfo(t.INT64 | t.ARRAY, dimensions=-1)
    with pytest.raises(ValueError):
        MetaFFITypeInfo(t.INT64, dimensions=1)
    with pytest.raises(ValueError):
        MetaFFITypeInfo(t.INT64, dimensions=-1)
    with pytest.raises(ValueError):
        MetaFFITypeInfo(t.INT64 | t.ARRAY, dimensions=-2)


def test_type_info_alias_must_be_nonempty():
    assert MetaFFITypeInfo(t.HANDLE, alias="Counter").alias == "Counter"
    with pytest.raises(ValueError):
        MetaFFITypeInfo(t.HANDLE, alias="")


def test_composite_flags_are_intflag_values():
    composite = t.INT64 | t.ARRAY
    assert isinstance(composite, MetaFFITypes)
    assert composite & t.ARRAY
