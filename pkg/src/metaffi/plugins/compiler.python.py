"""Compiler plugin: Python as the host language.

compile_from_host renders the wrapper module next to output_path.
Python-as-guest generation is not provided; compile_to_guest reports
Not Implemented in an allocator-owned error the caller frees.
"""

from metaffi.compiler import host_python


def init() -> None:
    return None


def compile_from_host(idl_json, output_path, host_options, err):
    try:
        host_python.compile_from_host(idl_json, output_path, host_options or "")
    except Exception as exc:
        err.set(str(exc) or type(exc).__name__)
    return None


def compile_to_guest(idl_json, output_path, guest_options, err):
    err.set("Not Implemented")
    return None
