"""Compiler plugin: tabular as the guest language.

The tabular runtime loads manifest entities directly, so there are no
guest stubs to generate; both directions report Not Implemented in an
allocator-owned error the caller frees.
"""


def init() -> None:
    return None


def compile_to_guest(idl_json, output_path, guest_options, err):
    err.set("Not Implemented")
    return None


def compile_from_host(idl_json, output_path, host_options, err):
    err.set("Not Implemented")
    return None
