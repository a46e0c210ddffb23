"""MetaFFI type system: the normative type constants and signature type-info.

Every value crossing a runtime boundary is tagged with one of 24 base type
constants; arrays combine a base constant with the ARRAY flag bit. The
numeric values are part of the ABI and are published as a manifest consumed
by plugins (see docs/abi/metaffi_types.json).
"""

from __future__ import annotations

import enum
from dataclasses import dataclass


class MetaFFITypes(enum.IntFlag):
    """The 24 type constants. One bit per base type; ARRAY is combinable."""

    metaffi_float64_type = 1 << 0
    metaffi_float32_type = 1 << 1
    metaffi_int8_type = 1 << 2
    metaffi_int16_type = 1 << 3
    metaffi_int32_type = 1 << 4
    metaffi_int64_type = 1 << 5
    metaffi_uint8_type = 1 << 6
    metaffi_uint16_type = 1 << 7
    metaffi_uint32_type = 1 << 8
    metaffi_uint64_type = 1 << 9
    metaffi_bool_type = 1 << 10
    metaffi_char8_type = 1 << 11
    metaffi_string8_type = 1 << 12
    metaffi_char16_type = 1 << 13
    metaffi_string16_type = 1 << 14
    metaffi_char32_type = 1 << 15
    metaffi_string32_type = 1 << 16
    metaffi_handle_type = 1 << 17
    metaffi_callable_type = 1 << 18
    metaffi_any_type = 1 << 19
    metaffi_null_type = 1 << 20
    metaffi_size_type = 1 << 21
    metaffi_type_type = 1 << 22
    metaffi_array_type = 1 << 63


# Short aliases used throughout the implementation.
FLOAT64 = MetaFFITypes.metaffi_float64_type
FLOAT32 = MetaFFITypes.metaffi_float32_type
INT8 = MetaFFITypes.metaffi_int8_type
INT16 = MetaFFITypes.metaffi_int16_type
INT32 = MetaFFITypes.metaffi_int32_type
INT64 = MetaFFITypes.metaffi_int64_type
UINT8 = MetaFFITypes.metaffi_uint8_type
UINT16 = MetaFFITypes.metaffi_uint16_type
UINT32 = MetaFFITypes.metaffi_uint32_type
UINT64 = MetaFFITypes.metaffi_uint64_type
BOOL = MetaFFITypes.metaffi_bool_type
CHAR8 = MetaFFITypes.metaffi_char8_type
STRING8 = MetaFFITypes.metaffi_string8_type
CHAR16 = MetaFFITypes.metaffi_char16_type
STRING16 = MetaFFITypes.metaffi_string16_type
CHAR32 = MetaFFITypes.metaffi_char32_type
STRING32 = MetaFFITypes.metaffi_string32_type
HANDLE = MetaFFITypes.metaffi_handle_type
CALLABLE = MetaFFITypes.metaffi_callable_type
ANY = MetaFFITypes.metaffi_any_type
NULL = MetaFFITypes.metaffi_null_type
SIZE = MetaFFITypes.metaffi_size_type
TYPE = MetaFFITypes.metaffi_type_type
ARRAY = MetaFFITypes.metaffi_array_type

#: name -> constant, in the normative documented order.
TYPE_NAMES: dict[str, MetaFFITypes] = {
    "float64": FLOAT64,
    "float32": FLOAT32,
    "int8": INT8,
    "int16": INT16,
    "int32": INT32,
    "int64": INT64,
    "uint8": UINT8,
    "uint16": UINT16,
    "uint32": UINT32,
    "uint64": UINT64,
    "bool": BOOL,
    "char8": CHAR8,
    "string8": STRING8,
    "char16": CHAR16,
    "string16": STRING16,
    "char32": CHAR32,
    "string32": STRING32,
    "handle": HANDLE,
    "callable": CALLABLE,
    "any": ANY,
    "null": NULL,
    "size": SIZE,
    "type": TYPE,
    "array": ARRAY,
}

_CONSTANT_NAMES: dict[int, str] = {int(v): k for k, v in TYPE_NAMES.items()}


class UnknownTypeName(ValueError):
    pass


def type_name_to_constant(name: str) -> MetaFFITypes:
    """Map a type name, optionally suffixed "_array", to its constant."""
    base_name = name
    array = False
    if name.endswith("_array") and name != "_array":
        base_name = name[: -len("_array")]
        array = True
    try:
        base = TYPE_NAMES[base_name]
    except KeyError:
        raise UnknownTypeName(f"unknown MetaFFI type name: {name!r}") from None
    return base | ARRAY if array else base


def constant_to_type_name(t: MetaFFITypes | int) -> str:
    """Inverse of type_name_to_constant; array-flagged tags gain "_array"."""
    value = int(t)
    if value in _CONSTANT_NAMES:
        return _CONSTANT_NAMES[value]
    base = value & ~int(ARRAY)
    if value & int(ARRAY) and base in _CONSTANT_NAMES:
        return _CONSTANT_NAMES[base] + "_array"
    raise UnknownTypeName(f"no MetaFFI type with value {value:#x}")


def base_type(t: MetaFFITypes | int) -> MetaFFITypes:
    """Strip the ARRAY flag. base_type(ARRAY) is ARRAY itself."""
    value = int(t)
    base = value & ~int(ARRAY)
    return MetaFFITypes(base) if base else ARRAY


def is_array_type(t: MetaFFITypes | int) -> bool:
    return bool(int(t) & int(ARRAY))


@dataclass(frozen=True)
class MetaFFITypeInfo:
    """Declared type of one parameter or return value.

    dimensions: 0 scalar, >0 fixed array depth, -1 dynamic/mixed depth.
    alias carries a guest-side name (e.g. a class name) for handle types.
    """

    type: MetaFFITypes
    alias: str | None = None
    dimensions: int = 0

    def __post_init__(self) -> None:
        if self.dimensions < -1:
            raise ValueError(f"invalid dimensions: {self.dimensions}")
        if self.dimensions != 0 and not is_array_type(self.type):
            raise ValueError(
                f"dimensions={self.dimensions} requires the ARRAY flag on "
                f"type {constant_to_type_name(self.type)}"
            )
        if self.alias is not None and not self.alias:
            raise ValueError("alias must be non-empty when present")

    @property
    def name(self) -> str:
        return constant_to_type_name(self.type)
