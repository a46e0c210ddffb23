"""IDL plugin for tabular manifests.

parse_idl accepts manifest source text (input type 0) or a manifest file
path (input type 1) and returns the IDL JSON document in an
allocator-owned string8 buffer; the caller frees it. Failures set err
(also allocator-owned) and return None.
"""

from metaffi.allocator import default_allocator
from metaffi.idl import idl_to_json
from metaffi.plugin_abi import IDL_INPUT_PATH, IDL_INPUT_SOURCE_CODE
from metaffi.tabular.idl_gen import manifest_to_idl


def init() -> None:
    return None


def parse_idl(input_type, data, err):
    try:
        if input_type == IDL_INPUT_SOURCE_CODE:
            idl = manifest_to_idl(data)
        elif input_type == IDL_INPUT_PATH:
            try:
                text = open(data, encoding="utf-8").read()
            except OSError as exc:
                raise ValueError(f"cannot read manifest {data!r}: {exc}") from None
            idl = manifest_to_idl(text, source_path=data)
        else:
            raise ValueError(f"unknown idl input type {input_type}")
        return default_allocator.alloc_string8(idl_to_json(idl))
    except Exception as exc:
        err.set(str(exc) or type(exc).__name__)
        return None
