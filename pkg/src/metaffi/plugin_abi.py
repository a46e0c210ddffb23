"""Plugin discovery, loading, and symbol binding.

Plugins are dynamic-library-style Python modules loaded by file path, never
imported by package name. Discovery searches the directories listed in
METAFFI_HOME (os.pathsep-separated), then the package's built-in plugins
directory. File naming:

    runtime:  xllr.<name>.py
    idl:      idl.<name>.py
    compiler: compiler.<name>.py

Binding is atomic: a plugin missing any required symbol is rejected without
leaving a trace, and the error names the absent symbol. idl/compiler
plugins have their init() called exactly once per process.
"""

from __future__ import annotations

import importlib.util
import logging
import os
import sys
import threading
from dataclasses import dataclass
from pathlib import Path
from types import ModuleType
from typing import Callable

logger = logging.getLogger(__name__)

_FILE_STEMS = {
    "runtime": "xllr",
    "idl": "idl",
    "compiler": "compiler",
}

_REQUIRED_SYMBOLS = {
    "runtime": ("load_runtime", "free_runtime", "load_entity", "make_callable", "free_xcall"),
    "idl": ("init", "parse_idl"),
    "compiler": ("init", "compile_to_guest", "compile_from_host"),
}

# idl_input_type values fixed by the plugin ABI
IDL_INPUT_SOURCE_CODE = 0
IDL_INPUT_PATH = 1


class PluginLoadError(RuntimeError):
    pass


@dataclass(frozen=True)
class RuntimePluginInterface:
    name: str
    runtime_id: int
    load_runtime: Callable
    free_runtime: Callable
    load_entity: Callable
    make_callable: Callable
    free_xcall: Callable
    module: ModuleType


@dataclass(frozen=True)
class IdlPluginInterface:
    name: str
    init: Callable
    parse_idl: Callable
    module: ModuleType


@dataclass(frozen=True)
class CompilerPluginInterface:
    name: str
    init: Callable
    compile_to_guest: Callable
    compile_from_host: Callable
    module: ModuleType


_load_lock = threading.Lock()
_loaded_modules: dict[str, ModuleType] = {}  # absolute path -> module
_initialized_paths: set[str] = set()  # idl/compiler plugins whose init ran


def plugin_search_dirs() -> list[Path]:
    """METAFFI_HOME directories first, the built-in plugins dir last."""
    dirs: list[Path] = []
    home = os.environ.get("METAFFI_HOME", "")
    for part in home.split(os.pathsep):
        if part:
            dirs.append(Path(part))
    dirs.append(Path(__file__).resolve().parent / "plugins")
    return dirs


def _resolve_plugin_file(kind: str, name: str) -> Path:
    filename = f"{_FILE_STEMS[kind]}.{name}.py"
    searched = plugin_search_dirs()
    for directory in searched:
        candidate = directory / filename
        if candidate.is_file():
            return candidate
    locations = os.pathsep.join(str(d) for d in searched)
    raise PluginLoadError(
        f"cannot resolve {kind} plugin {name!r}: no {filename} under {locations}"
    )


def _load_module(path: Path) -> ModuleType:
    key = str(path)
    if key in _loaded_modules:
        return _loaded_modules[key]
    module_name = "metaffi_plugin_" + key.replace(os.sep, "_").replace(".", "_")
    spec = importlib.util.spec_from_file_location(module_name, path)
    if spec is None or spec.loader is None:
        raise PluginLoadError(f"cannot load plugin library {path}")
    module = importlib.util.module_from_spec(spec)
    # registered before exec: stdlib machinery (dataclasses resolving string
    # annotations, pickling) looks modules up by name in sys.modules
    sys.modules[module_name] = module
    try:
        spec.loader.exec_module(module)
    except BaseException:
        sys.modules.pop(module_name, None)
        raise
    _loaded_modules[key] = module
    logger.debug("loaded plugin library %s", path)
    return module


def _bind(module: ModuleType, kind: str, name: str, path: Path):
    missing = [sym for sym in _REQUIRED_SYMBOLS[kind] if not hasattr(module, sym)]
    if missing:
        raise PluginLoadError(
            f"{kind} plugin {name!r} ({path}) is missing symbol {missing[0]!r}"
        )
    symbols = {sym: getattr(module, sym) for sym in _REQUIRED_SYMBOLS[kind]}
    if kind == "runtime":
        runtime_id = getattr(module, "runtime_id", None)
        if not isinstance(runtime_id, int) or runtime_id == 0:
            raise PluginLoadError(
                f"runtime plugin {name!r} ({path}) is missing symbol 'runtime_id'"
            )
        return RuntimePluginInterface(name=name, runtime_id=runtime_id, module=module, **symbols)
    if kind == "idl":
        return IdlPluginInterface(name=name, module=module, **symbols)
    return CompilerPluginInterface(name=name, module=module, **symbols)


def discover_and_load_plugin(kind: str, name: str):
    """Resolve, load, and atomically bind a plugin; init idl/compiler
    plugins exactly once per process."""
    if kind not in _REQUIRED_SYMBOLS:
        raise ValueError(f"unknown plugin kind: {kind!r}")
    path = _resolve_plugin_file(kind, name)
    with _load_lock:
        preloaded = str(path) in _loaded_modules
        module = _load_module(path)
        try:
            interface = _bind(module, kind, name, path)
        except PluginLoadError:
            if not preloaded:
                _loaded_modules.pop(str(path), None)  # atomic: leave no trace
            raise
        if kind in ("idl", "compiler") and str(path) not in _initialized_paths:
            interface.init()
            _initialized_paths.add(str(path))
    return interface


def select_entrypoint(params_count: int, ret_count: int) -> str:
    """Name of the entrypoint variant serving a (params, rets) signature."""
    if params_count > 0 and ret_count > 0:
        return "xcall_params_ret"
    if params_count > 0:
        return "xcall_params_no_ret"
    if ret_count > 0:
        return "xcall_no_params_ret"
    return "xcall_no_params_no_ret"
