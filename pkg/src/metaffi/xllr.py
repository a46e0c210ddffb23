"""XLLR: the Cross-Language Link Runtime.

Owns the runtime-plugin registry (reference-counted, pairwise-distinct
runtime ids), forwards entity loading and callable wrapping to plugins,
and re-exports the shared allocator and CDTS buffer surface so the whole
exported symbol set lives on one module:

    load_runtime_plugin, free_runtime_plugin, load_function (alias
    load_entity), make_callable, free_xcall, alloc_cdts_buffer,
    free_cdts_buffer, xllr_alloc (alias metaffi_alloc), xllr_free (alias
    metaffi_free), alloc_string8/16/32, free_string

Load/free of a plugin name is serialized by one lock; the registry read
path (load_function, make_callable) is lock-free.
"""

from __future__ import annotations

import logging
import threading
from dataclasses import dataclass
from typing import Any, Sequence

from .allocator import (  # noqa: F401  (re-exported symbol surface)
    ErrorSlot,
    alloc_string8,
    alloc_string16,
    alloc_string32,
    default_allocator,
    free_string,
    xllr_alloc,
    xllr_free,
)
from .plugin_abi import RuntimePluginInterface, discover_and_load_plugin
from .types import MetaFFITypeInfo
from .xcall import (  # noqa: F401  (re-exported symbol surface)
    XCall,
    alloc_cdts_buffer,
    free_cdts_buffer,
    invoke_xcall,
)

logger = logging.getLogger(__name__)

metaffi_alloc = xllr_alloc
metaffi_free = xllr_free


class XllrError(RuntimeError):
    pass


@dataclass
class _RegistryEntry:
    interface: RuntimePluginInterface
    refcount: int


_registry_lock = threading.Lock()
_registry: dict[str, _RegistryEntry] = {}


def _raise_from_slot(err: ErrorSlot, fallback: str) -> None:
    message = err.take()
    raise XllrError(message if message is not None else fallback)


def load_runtime_plugin(name: str) -> None:
    """Load a runtime plugin and initialize its guest runtime. Repeated
    loads only increment the reference count."""
    with _registry_lock:
        entry = _registry.get(name)
        if entry is not None:
            entry.refcount += 1
            return
        interface = discover_and_load_plugin("runtime", name)
        for other_name, other in _registry.items():
            if other.interface.runtime_id == interface.runtime_id:
                raise XllrError(
                    f"runtime_id collision: {name!r} and {other_name!r} both "
                    f"register {interface.runtime_id:#x}"
                )
        err = ErrorSlot()
        interface.load_runtime(err)
        if err.is_set():
            _raise_from_slot(err, f"load_runtime failed for {name!r}")
        _registry[name] = _RegistryEntry(interface=interface, refcount=1)
        logger.info("runtime plugin %s loaded (runtime_id=%#x)", name, interface.runtime_id)


def free_runtime_plugin(name: str) -> None:
    """Drop one reference; at zero the guest runtime is torn down."""
    with _registry_lock:
        entry = _registry.get(name)
        if entry is None:
            raise XllrError(f"runtime plugin {name!r} is not loaded")
        entry.refcount -= 1
        if entry.refcount > 0:
            return
        err = ErrorSlot()
        entry.interface.free_runtime(err)
        del _registry[name]
        if err.is_set():
            _raise_from_slot(err, f"free_runtime failed for {name!r}")
        logger.info("runtime plugin %s unloaded", name)


def _entry(name: str) -> _RegistryEntry:
    entry = _registry.get(name)
    if entry is None:
        raise XllrError(f"runtime plugin {name!r} is not loaded")
    return entry


def load_function(
    runtime_plugin_name: str,
    module_path: str,
    function_path: str,
    params: Sequence[MetaFFITypeInfo] = (),
    rets: Sequence[MetaFFITypeInfo] = (),
) -> XCall:
    """Load a foreign entity and return its XCall."""
    entry = _entry(runtime_plugin_name)
    err = ErrorSlot()
    xcall = entry.interface.load_entity(module_path, function_path, params, rets, err)
    if err.is_set() or xcall is None:
        _raise_from_slot(err, f"load_entity failed for {function_path!r}")
    return xcall


load_entity = load_function


def make_callable(
    runtime_plugin_name: str,
    token: Any,
    params: Sequence[MetaFFITypeInfo] = (),
    rets: Sequence[MetaFFITypeInfo] = (),
) -> XCall:
    """Wrap a live callable token from the target runtime as an XCall."""
    entry = _entry(runtime_plugin_name)
    err = ErrorSlot()
    xcall = entry.interface.make_callable(token, params, rets, err)
    if err.is_set() or xcall is None:
        _raise_from_slot(err, "make_callable failed")
    return xcall


def free_xcall(runtime_plugin_name: str, xcall: XCall) -> None:
    """Release an XCall's plugin-side context."""
    entry = _entry(runtime_plugin_name)
    err = ErrorSlot()
    entry.interface.free_xcall(xcall, err)
    if err.is_set():
        _raise_from_slot(err, "free_xcall failed")


def loaded_plugin_names() -> list[str]:
    return list(_registry)


def registry_snapshot() -> dict[str, tuple[int, int]]:
    """name -> (refcount, runtime_id); registry-state oracle for tests."""
    return {
        name: (entry.refcount, entry.interface.runtime_id)
        for name, entry in _registry.items()
    }
