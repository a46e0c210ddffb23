"""The metaffi command-line tool.

    metaffi -c --idl <path> [-g] [-h] [--guest-options k=v,...] [--host-options k=v,...]

-c compiles the given interface definition: -g dispatches to the guest
compiler plugin, -h to the host compiler plugin; both may be combined.
The IDL plugin is chosen by the input file's extension (extensions.json);
.json inputs are taken as IDL documents directly. Output lands in the
working directory.

Exit status: 0 success, 1 usage error, 2 plugin or compilation failure.
Note -h selects host compilation; there is no help flag.
"""

from __future__ import annotations

import argparse
import json
import sys
from importlib import resources
from pathlib import Path

from .allocator import ErrorSlot, default_allocator, read_string8
from .plugin_abi import IDL_INPUT_PATH, PluginLoadError, discover_and_load_plugin

USAGE = (
    "usage: metaffi -c --idl <path> [-g] [-h] "
    "[--guest-options k=v,...] [--host-options k=v,...]"
)


class UsageError(Exception):
    pass


class CliError(Exception):
    """Failure inside a plugin or compiler; exit status 2."""


class _Parser(argparse.ArgumentParser):
    def error(self, message: str) -> None:  # argparse would sys.exit(2)
        raise UsageError(message)


def _build_parser() -> _Parser:
    parser = _Parser(prog="metaffi", add_help=False, allow_abbrev=False)
    parser.add_argument("-c", dest="compile", action="store_true")
    parser.add_argument("--idl")
    parser.add_argument("-g", dest="guest", action="store_true")
    parser.add_argument("-h", dest="host", action="store_true")
    parser.add_argument("--guest-options", default="")
    parser.add_argument("--host-options", default="")
    return parser


def _extensions() -> dict:
    text = resources.files(__package__).joinpath("extensions.json").read_text(
        encoding="utf-8"
    )
    return json.loads(text)


def _load_plugin(kind: str, name: str):
    try:
        return discover_and_load_plugin(kind, name)
    except PluginLoadError as exc:
        raise CliError(str(exc)) from None


def _obtain_idl_json(idl_path: str) -> str:
    extension = Path(idl_path).suffix
    if extension == ".json":
        try:
            return Path(idl_path).read_text(encoding="utf-8")
        except OSError as exc:
            raise CliError(f"cannot read IDL {idl_path!r}: {exc}") from None
    plugin_name = _extensions()["idl_plugins"].get(extension)
    if plugin_name is None:
        raise UsageError(f"unknown IDL extension {extension!r} for {idl_path!r}")
    plugin = _load_plugin("idl", plugin_name)
    err = ErrorSlot()
    buffer = plugin.parse_idl(IDL_INPUT_PATH, idl_path, err)
    message = err.take()
    if message is not None or buffer is None:
        raise CliError(message or "idl plugin returned no output")
    text = read_string8(buffer)
    default_allocator.free(buffer)
    return text


def _run_compiler(direction: str, idl_path: str, idl_json: str, options: str) -> None:
    config = _extensions()
    if direction == "guest":
        name = config["guest_compilers"].get(Path(idl_path).suffix)
        if name is None:
            raise UsageError(
                f"no guest compiler for extension {Path(idl_path).suffix!r}"
            )
    else:
        name = config["default_host_compiler"]
    plugin = _load_plugin("compiler", name)
    err = ErrorSlot()
    out_dir = str(Path.cwd())
    if direction == "guest":
        plugin.compile_to_guest(idl_json, out_dir, options, err)
    else:
        plugin.compile_from_host(idl_json, out_dir, options, err)
    message = err.take()
    if message is not None:
        raise CliError(f"{name} {direction} compiler: {message}")


def main(argv: list[str] | None = None) -> int:
    try:
        args = _build_parser().parse_args(argv)
        if not args.compile:
            raise UsageError("-c is required (compile is the only mode)")
        if not args.idl:
            raise UsageError("--idl <path> is required")
        if not (args.guest or args.host):
            raise UsageError("nothing to do: pass -g and/or -h")
    except UsageError as exc:
        print(f"metaffi: {exc}", file=sys.stderr)
        print(USAGE, file=sys.stderr)
        return 1
    try:
        idl_json = _obtain_idl_json(args.idl)
        if args.guest:
            _run_compiler("guest", args.idl, idl_json, args.guest_options)
        if args.host:
            _run_compiler("host", args.idl, idl_json, args.host_options)
    except UsageError as exc:
        print(f"metaffi: {exc}", file=sys.stderr)
        print(USAGE, file=sys.stderr)
        return 1
    except CliError as exc:
        print(f"metaffi: {exc}", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
