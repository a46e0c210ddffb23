"""Common Data Types: the tagged value cells every cross-runtime call uses.

A CDT is one tagged value; a CDTS is a counted sequence of CDTs. String
payloads live in allocator-owned buffers, arrays own their element storage,
handles and callables are passed by reference and never owned by the cell
(handle lifetime is explicit via the handle's release entrypoint).

The documented C layout (LP64): CDT is 24 bytes (8 type, 1 free_required,
7 pad, 8 union of scalar-or-pointer), CDTS is 24 bytes (8 element pointer,
8 length, 1 heap flag, 7 pad). See docs/abi.md.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass, field
from typing import Any, Callable, Sequence

from .allocator import (
    Allocator,
    Buffer,
    default_allocator,
    read_string8,
    read_string16,
    read_string32,
)
from .types import (
    ANY,
    ARRAY,
    BOOL,
    CALLABLE,
    CHAR8,
    CHAR16,
    CHAR32,
    FLOAT32,
    FLOAT64,
    HANDLE,
    INT8,
    INT16,
    INT32,
    INT64,
    NULL,
    SIZE,
    STRING8,
    STRING16,
    STRING32,
    TYPE,
    UINT8,
    UINT16,
    UINT32,
    UINT64,
    MetaFFITypeInfo,
    MetaFFITypes,
    base_type,
    constant_to_type_name,
    is_array_type,
)

CDT_BYTE_SIZE = 24
CDTS_BYTE_SIZE = 24
XCALL_BYTE_SIZE = 16

_INT_RANGES = {
    INT8: (-(1 << 7), (1 << 7) - 1),
    INT16: (-(1 << 15), (1 << 15) - 1),
    INT32: (-(1 << 31), (1 << 31) - 1),
    INT64: (-(1 << 63), (1 << 63) - 1),
    UINT8: (0, (1 << 8) - 1),
    UINT16: (0, (1 << 16) - 1),
    UINT32: (0, (1 << 32) - 1),
    UINT64: (0, (1 << 64) - 1),
    SIZE: (0, (1 << 64) - 1),
}

_FLOAT_TYPES = (FLOAT32, FLOAT64)
_STRING_TYPES = (STRING8, STRING16, STRING32)
_CHAR_TYPES = (CHAR8, CHAR16, CHAR32)

_ALLOC_STRING = {
    STRING8: Allocator.alloc_string8,
    STRING16: Allocator.alloc_string16,
    STRING32: Allocator.alloc_string32,
}
_READ_STRING = {
    STRING8: read_string8,
    STRING16: read_string16,
    STRING32: read_string32,
}


class CdtError(TypeError):
    """Tag/payload mismatch or malformed CDT construction."""


@dataclass(eq=False)
class HandleValue:
    """Opaque token for a guest object, stamped with its runtime of origin.

    release, when set, points back into the originating runtime; calling it
    unpins the object there. Release failures are logged by the runtime, not
    raised, because the entrypoint has no error channel.
    """

    handle: int
    runtime_id: int
    release: Callable[["HandleValue"], None] | None = None

    def __post_init__(self) -> None:
        if self.runtime_id == 0:
            raise CdtError("handle runtime_id must be nonzero")

    def release_object(self) -> None:
        if self.release is not None:
            self.release(self)


@dataclass(eq=False)
class CallableValue:
    """A foreign callable: its XCall plus declared parameter/return tags."""

    xcall: Any  # XCall; kept opaque here to avoid an import cycle
    parameter_types: tuple[MetaFFITypes, ...] = ()
    retval_types: tuple[MetaFFITypes, ...] = ()


@dataclass(eq=False)
class CDTS:
    """Counted CDT sequence. arr_buffer tracks the allocator-owned element
    storage for heap-built sequences; cache-served ones own nothing."""

    arr: list["CDT"] = field(default_factory=list)
    allocated_on_heap: bool = False
    arr_buffer: Buffer | None = None

    @property
    def length(self) -> int:
        return len(self.arr)

    def __len__(self) -> int:
        return len(self.arr)

    def __getitem__(self, index: int) -> "CDT":
        return self.arr[index]


@dataclass(eq=False)
class CDT:
    type: MetaFFITypes = NULL
    free_required: bool = False
    value: Any = None

    def __repr__(self) -> str:  # pragma: no cover - debugging aid
        try:
            name = constant_to_type_name(self.type)
        except Exception:
            name = hex(int(self.type))
        return f"CDT({name}, {self.value!r})"


def _check_payload(t: MetaFFITypes, value: Any) -> None:
    base = base_type(t)
    if base in _INT_RANGES:
        if isinstance(value, bool) or not isinstance(value, int):
            raise CdtError(f"{constant_to_type_name(base)} payload must be int, got {type(value).__name__}")
        lo, hi = _INT_RANGES[base]
        if not lo <= value <= hi:
            raise CdtError(f"{value} out of range for {constant_to_type_name(base)}")
    elif base in _FLOAT_TYPES:
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            raise CdtError(f"{constant_to_type_name(base)} payload must be float, got {type(value).__name__}")
    elif base is BOOL:
        if not isinstance(value, bool):
            raise CdtError(f"bool payload must be bool, got {type(value).__name__}")
    elif base in _CHAR_TYPES:
        if not isinstance(value, str) or len(value) != 1:
            raise CdtError("char payload must be a single code point")
    elif base in _STRING_TYPES:
        if not isinstance(value, str):
            raise CdtError(f"string payload must be str, got {type(value).__name__}")
    elif base is TYPE:
        if not isinstance(value, (int, MetaFFITypes)):
            raise CdtError("type payload must be a MetaFFI type constant")
    else:
        raise CdtError(f"{constant_to_type_name(t)} is not a primitive type")


def make_primitive_cdt(
    t: MetaFFITypes,
    value: Any,
    allocator: Allocator | None = None,
) -> CDT:
    """Build a scalar CDT. String payloads are copied into allocator-owned
    null-terminated storage and marked free_required."""
    if is_array_type(t):
        raise CdtError("make_primitive_cdt cannot build arrays")
    allocator = allocator or default_allocator
    _check_payload(t, value)
    base = base_type(t)
    if base in _STRING_TYPES:
        buf = _ALLOC_STRING[base](allocator, value)
        return CDT(type=base, free_required=True, value=buf)
    if base is FLOAT32:
        # squeeze through single precision so the cell carries the ABI value
        value = struct.unpack("f", struct.pack("f", value))[0]
    elif base is FLOAT64:
        value = float(value)
    return CDT(type=base, free_required=False, value=value)


def make_handle_cdt(handle: HandleValue) -> CDT:
    if not isinstance(handle, HandleValue):
        raise CdtError("handle payload must be a HandleValue")
    return CDT(type=HANDLE, free_required=False, value=handle)


def make_callable_cdt(value: CallableValue) -> CDT:
    if not isinstance(value, CallableValue):
        raise CdtError("callable payload must be a CallableValue")
    return CDT(type=CALLABLE, free_required=False, value=value)


def make_array_cdt(
    elements: Sequence[CDT],
    allocator: Allocator | None = None,
) -> CDT:
    """Build an array CDT owning its elements. Ragged and mixed-depth
    element sequences are permitted; the base tag is the elements' common
    base type, or `any` when elements are mixed or absent."""
    allocator = allocator or default_allocator
    elements = list(elements)
    for el in elements:
        if not isinstance(el, CDT):
            raise CdtError("array elements must be CDTs")
    bases = {int(base_type(el.type)) for el in elements}
    base = MetaFFITypes(bases.pop()) if len(bases) == 1 else ANY
    if base is ARRAY:  # elements are untagged arrays only
        base = ANY
    arr_buffer = allocator.alloc(len(elements) * CDT_BYTE_SIZE)
    if arr_buffer is None:
        raise CdtError("allocator exhausted while building an array")
    cdts = CDTS(arr=elements, allocated_on_heap=True, arr_buffer=arr_buffer)
    return CDT(type=base | ARRAY, free_required=True, value=cdts)


def deep_free_cdt(cdt: CDT, allocator: Allocator | None = None) -> None:
    """Recursively release every payload marked free_required. Handles are
    never released here; their lifetime is explicit via release."""
    allocator = allocator or default_allocator
    value = cdt.value
    if isinstance(value, CDTS):
        for el in value.arr:
            deep_free_cdt(el, allocator)
        if cdt.free_required and value.arr_buffer is not None:
            allocator.free(value.arr_buffer)
            value.arr_buffer = None
    elif isinstance(value, Buffer):
        if cdt.free_required:
            allocator.free(value)
    # handles/callables/scalars own nothing


def reset_cdt(cdt: CDT) -> None:
    """Return a cell to its empty state (cache reuse)."""
    cdt.type = NULL
    cdt.free_required = False
    cdt.value = None


def _infer_scalar_type(value: Any) -> MetaFFITypes:
    if isinstance(value, bool):
        return BOOL
    if isinstance(value, int):
        return INT64
    if isinstance(value, float):
        return FLOAT64
    if isinstance(value, str):
        return STRING8
    if isinstance(value, HandleValue):
        return HANDLE
    if isinstance(value, CallableValue):
        return CALLABLE
    raise CdtError(f"cannot infer a MetaFFI type for {type(value).__name__}")


def encode(
    value: Any,
    info: MetaFFITypeInfo,
    allocator: Allocator | None = None,
) -> CDT:
    """Build a CDT for a host value under a declared type.

    Declared `any` resolves the tag from the runtime value. None is not
    encodable: the null type appears only in signature declarations, never
    in a live slot.
    """
    allocator = allocator or default_allocator
    if value is None:
        raise CdtError("None cannot occupy a live CDT slot")
    declared_array = is_array_type(info.type) or info.dimensions != 0
    base = base_type(info.type)

    if isinstance(value, (list, tuple)):
        if not declared_array and base is not ANY:
            raise CdtError(f"sequence passed for scalar {constant_to_type_name(info.type)}")
        if info.dimensions > 0:
            element_dims = info.dimensions - 1
        else:
            element_dims = -1  # dynamic depth
        element_base = base if base is not ARRAY else ANY
        elements = []
        for item in value:
            if isinstance(item, (list, tuple)):
                el_type = element_base | ARRAY
                el_info = MetaFFITypeInfo(el_type, dimensions=element_dims if element_dims != 0 else -1)
            else:
                el_info = MetaFFITypeInfo(element_base)
            elements.append(encode(item, el_info, allocator))
        return make_array_cdt(elements, allocator)

    if declared_array and base is not ANY:
        raise CdtError(f"scalar passed for array {constant_to_type_name(info.type)}")
    if base is ANY:
        base = _infer_scalar_type(value)
    if base is HANDLE:
        return make_handle_cdt(value)
    if base is CALLABLE:
        return make_callable_cdt(value)
    if base in (SIZE, TYPE):
        _check_payload(base, value)
        return CDT(type=base, free_required=False, value=int(value))
    return make_primitive_cdt(base, value, allocator)


def encode_into(
    cell: CDT,
    value: Any,
    info: MetaFFITypeInfo,
    allocator: Allocator | None = None,
) -> None:
    """Encode into an existing (cache) cell."""
    built = encode(value, info, allocator)
    cell.type = built.type
    cell.free_required = built.free_required
    cell.value = built.value


def decode(cdt: CDT, allocator: Allocator | None = None) -> Any:
    """Read a CDT back into a host value. Strings are copied out; the cell
    keeps ownership of its buffer."""
    base = base_type(cdt.type)
    if is_array_type(cdt.type):
        cdts: CDTS = cdt.value
        return [decode(el, allocator) for el in cdts.arr]
    if base in _STRING_TYPES:
        return _READ_STRING[base](cdt.value)
    if base is NULL:
        raise CdtError("null CDT in a live slot")
    return cdt.value


def type_info_of(cdt: CDT) -> MetaFFITypeInfo:
    """Derive the declared-type view of a live CDT (dimensions computed
    from the tree: uniform depth if consistent, -1 for mixed depth)."""
    if not is_array_type(cdt.type):
        return MetaFFITypeInfo(cdt.type)
    return MetaFFITypeInfo(cdt.type, dimensions=_tree_dimensions(cdt))


def _tree_dimensions(cdt: CDT) -> int:
    if not is_array_type(cdt.type):
        return 0
    cdts: CDTS = cdt.value
    depths = {_tree_dimensions(el) for el in cdts.arr}
    if not depths:
        return 1
    if len(depths) > 1 or -1 in depths:
        return -1
    return depths.pop() + 1


def structural_equal(a: CDT, b: CDT) -> bool:
    """Structural identity over type tags and logical payload content."""
    if int(a.type) != int(b.type):
        return False
    if is_array_type(a.type):
        ca: CDTS = a.value
        cb: CDTS = b.value
        if ca.length != cb.length:
            return False
        return all(structural_equal(x, y) for x, y in zip(ca.arr, cb.arr))
    base = base_type(a.type)
    if base in _STRING_TYPES:
        return _READ_STRING[base](a.value) == _READ_STRING[base](b.value)
    if base is HANDLE:
        return (a.value.handle, a.value.runtime_id) == (b.value.handle, b.value.runtime_id)
    if base is CALLABLE:
        return (
            a.value.xcall is b.value.xcall
            and a.value.parameter_types == b.value.parameter_types
            and a.value.retval_types == b.value.retval_types
        )
    if base is NULL:
        return True
    return a.value == b.value
