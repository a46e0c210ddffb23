"""ABI reference tables and their generated artifacts.

The numeric type constants and the record layouts crossing the plugin
boundary are normative. This module is their single source of truth:
`python3 -m metaffi.abi` regenerates docs/abi/metaffi_types.json (the
constants manifest plugins consume) and docs/abi/metaffi_types.h (the C
view of the records, with static size assertions), and `--check` verifies
the checked-in copies match. docs/abi.md narrates the same tables.
"""

from __future__ import annotations

import json
import struct
import sys
from dataclasses import dataclass
from pathlib import Path

from .plugin_abi import IDL_INPUT_PATH, IDL_INPUT_SOURCE_CODE
from .types import ARRAY, TYPE_NAMES

ABI_VERSION = 1

#: (name, bit index), normative order. Values are 1 << bit.
TYPE_CONSTANT_BITS: tuple[tuple[str, int], ...] = tuple(
    (name, int(constant).bit_length() - 1) for name, constant in TYPE_NAMES.items()
)


@dataclass(frozen=True)
class RecordLayout:
    """One ABI record: C-visible fields plus the equivalent struct format.

    fields are (name, c_type, note) triples; the format string reproduces
    the LP64 byte image including padding, so struct.calcsize(format) is
    the authoritative size.
    """

    name: str
    fields: tuple[tuple[str, str, str], ...]
    format: str
    size: int

    def __post_init__(self) -> None:
        actual = struct.calcsize(self.format)
        if actual != self.size:
            raise AssertionError(
                f"{self.name}: format {self.format!r} is {actual} bytes, "
                f"documented as {self.size}"
            )


CDT_LAYOUT = RecordLayout(
    name="cdt",
    fields=(
        ("type", "metaffi_type", "uint64 tag; base bit, optionally | ARRAY"),
        ("free_required", "uint8_t", "payload owns allocator storage"),
        ("(padding)", "uint8_t[7]", "aligns the union"),
        ("value", "union cdt_value", "8 bytes: scalar inline, else pointer"),
    ),
    format="=QB7x8s",
    size=24,
)

CDTS_LAYOUT = RecordLayout(
    name="cdts",
    fields=(
        ("arr", "struct cdt*", "contiguous elements"),
        ("length", "metaffi_size", "element count; 0 permitted"),
        ("allocated_on_heap", "uint8_t", "taken outside the per-thread cache"),
        ("(padding)", "uint8_t[7]", ""),
    ),
    format="=QQB7x",
    size=24,
)

XCALL_LAYOUT = RecordLayout(
    name="xcall",
    fields=(
        ("entrypoint", "void*", "foreign-callable address"),
        ("context", "void*", "opaque token owned by the runtime plugin"),
    ),
    format="=QQ",
    size=16,
)

HANDLE_LAYOUT = RecordLayout(
    name="cdt_metaffi_handle",
    fields=(
        ("handle", "void*", "opaque object token"),
        ("runtime_id", "uint64_t", "originating runtime; nonzero"),
        ("release", "void*", "release entrypoint; may be null"),
    ),
    format="=QQQ",
    size=24,
)

CALLABLE_LAYOUT = RecordLayout(
    name="cdt_metaffi_callable",
    fields=(
        ("val", "struct xcall", "invocation record, inline"),
        ("parameter_types", "metaffi_type*", ""),
        ("params_count", "metaffi_size", ""),
        ("retval_types", "metaffi_type*", ""),
        ("retvals_count", "metaffi_size", ""),
    ),
    format="=QQQQQQ",
    size=48,
)

RECORD_LAYOUTS: tuple[RecordLayout, ...] = (
    CDT_LAYOUT,
    CDTS_LAYOUT,
    XCALL_LAYOUT,
    HANDLE_LAYOUT,
    CALLABLE_LAYOUT,
)

#: plugin kind -> ((symbol, shape), ...). Shapes are the host-side view;
#: err is an out error slot, and every error string is allocator-owned.
PLUGIN_SYMBOLS: dict[str, tuple[tuple[str, str], ...]] = {
    "runtime": (
        ("runtime_id", "uint64 constant, nonzero, distinct per runtime"),
        ("load_runtime", "(err) -> void"),
        ("free_runtime", "(err) -> void"),
        (
            "load_entity",
            "(module_path, function_path, params_types[], retval_types[], err)"
            " -> xcall",
        ),
        ("make_callable", "(token, params_types[], retval_types[], err) -> xcall"),
        ("free_xcall", "(xcall, err) -> void"),
    ),
    "idl": (
        ("init", "() -> void; called once per process"),
        (
            "parse_idl",
            "(idl_input_type, data, err) -> allocator-owned IDL JSON buffer",
        ),
    ),
    "compiler": (
        ("init", "() -> void; called once per process"),
        ("compile_to_guest", "(idl_json, output_path, guest_options, err) -> void"),
        ("compile_from_host", "(idl_json, output_path, host_options, err) -> void"),
    ),
}

#: (params > 0, rets > 0) -> exported entrypoint variant.
ENTRYPOINT_VARIANTS: dict[tuple[bool, bool], str] = {
    (True, True): "xcall_params_ret",
    (True, False): "xcall_params_no_ret",
    (False, True): "xcall_no_params_ret",
    (False, False): "xcall_no_params_no_ret",
}

IDL_INPUT_TYPES: dict[str, int] = {
    "source_code": IDL_INPUT_SOURCE_CODE,
    "path": IDL_INPUT_PATH,
}


def manifest() -> dict:
    """The machine-readable constants table consumed by plugins."""
    return {
        "abi_version": ABI_VERSION,
        "array_flag_bit": int(ARRAY).bit_length() - 1,
        "types": [
            {"name": name, "bit": bit, "value": 1 << bit}
            for name, bit in TYPE_CONSTANT_BITS
        ],
        "records": [
            {"name": layout.name, "size": layout.size, "format": layout.format}
            for layout in RECORD_LAYOUTS
        ],
        "idl_input_types": dict(IDL_INPUT_TYPES),
    }


def render_manifest() -> str:
    return json.dumps(manifest(), indent=2) + "\n"


def render_header() -> str:
    """C11 header mirroring the tables, with static size assertions."""
    lines = [
        "/* Generated by metaffi.abi. DO NOT EDIT; regenerate with",
        " * `python3 -m metaffi.abi`. */",
        "#ifndef METAFFI_TYPES_H",
        "#define METAFFI_TYPES_H",
        "",
        "#include <stdint.h>",
        "",
        "typedef uint64_t metaffi_type;",
        "typedef uint64_t metaffi_size;",
        "",
    ]
    width = max(len(name) for name, _ in TYPE_CONSTANT_BITS)
    for name, bit in TYPE_CONSTANT_BITS:
        constant = f"metaffi_{name}_type"
        lines.append(f"#define {constant:<{width + 13}} (1ULL << {bit})")
    lines += [
        "",
        "struct xcall {",
        "    void* entrypoint;",
        "    void* context;",
        "};",
        "",
        "struct cdts;",
        "",
        "struct cdt_metaffi_handle {",
        "    void* handle;",
        "    uint64_t runtime_id;",
        "    void* release;",
        "};",
        "",
        "struct cdt_metaffi_callable {",
        "    struct xcall val;",
        "    metaffi_type* parameter_types;",
        "    metaffi_size params_count;",
        "    metaffi_type* retval_types;",
        "    metaffi_size retvals_count;",
        "};",
        "",
        "/* Scalars live inline; strings, handles, callables and arrays are",
        " * pointers to out-of-line storage (strings allocator-owned and",
        " * null-terminated, arrays a struct cdts). */",
        "union cdt_value {",
        "    double f64;",
        "    float f32;",
        "    int64_t i64;",
        "    uint64_t u64;",
        "    uint8_t boolean;",
        "    uint32_t c8;   /* char8: up to 4 UTF-8 code units */",
        "    uint32_t c16;  /* char16: up to 2 UTF-16 code units */",
        "    uint32_t c32;  /* char32: one UTF-32 code unit */",
        "    metaffi_type type;",
        "    void* ptr;",
        "};",
        "",
        "struct cdt {",
        "    metaffi_type type;",
        "    uint8_t free_required;",
        "    union cdt_value value;",
        "};",
        "",
        "struct cdts {",
        "    struct cdt* arr;",
        "    metaffi_size length;",
        "    uint8_t allocated_on_heap;",
        "};",
        "",
    ]
    for layout in RECORD_LAYOUTS:
        lines.append(
            f'_Static_assert(sizeof(struct {layout.name}) == {layout.size},'
            f' "{layout.name} ABI size");'
        )
    lines += ["", "#endif /* METAFFI_TYPES_H */", ""]
    return "\n".join(lines)


GENERATED_FILES = {
    "docs/abi/metaffi_types.json": render_manifest,
    "docs/abi/metaffi_types.h": render_header,
}


def write_artifacts(root: Path) -> list[Path]:
    written = []
    for rel, render in GENERATED_FILES.items():
        target = root / rel
        target.parent.mkdir(parents=True, exist_ok=True)
        target.write_text(render(), encoding="utf-8")
        written.append(target)
    return written


def check_artifacts(root: Path) -> list[str]:
    """Paths whose checked-in content differs from regeneration."""
    stale = []
    for rel, render in GENERATED_FILES.items():
        target = root / rel
        if not target.is_file() or target.read_text(encoding="utf-8") != render():
            stale.append(rel)
    return stale


def main(argv: list[str] | None = None) -> int:
    args = sys.argv[1:] if argv is None else list(argv)
    check = "--check" in args
    positional = [a for a in args if not a.startswith("-")]
    root = Path(positional[0]) if positional else Path.cwd()
    if check:
        stale = check_artifacts(root)
        for rel in stale:
            print(f"stale: {rel}", file=sys.stderr)
        return 1 if stale else 0
    for target in write_artifacts(root):
        print(target)
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
