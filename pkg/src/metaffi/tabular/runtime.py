"""The tabular reference guest runtime.

A deterministic in-process "guest": modules are manifest files declaring
entities, behaviors come from a built-in catalog keyed by entity name
(class names resolve by their final dotted segment, so a jar-like module
may declare org.apache.logging.log4j.LogManager). It implements the full
runtime-plugin contract: entity loading over function paths, the four
entrypoint variants, a pinned handle table stamped with the runtime's id,
and callbacks via CallableValues.

Recognized function-path keys: callable=, global=, class=, field=,
overload_index=. Recognized tags: instance_required, getter, setter.
"""

from __future__ import annotations

import logging
import os
import random
import threading
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Callable, Sequence

from ..allocator import ErrorSlot
from ..cdt import CDT, CallableValue, HandleValue, decode, encode_into
from ..function_path import FunctionPath, parse_function_path
from ..plugin_abi import select_entrypoint
from ..types import (
    ANY,
    CALLABLE,
    HANDLE,
    MetaFFITypeInfo,
    base_type,
    constant_to_type_name,
    is_array_type,
)
from ..xcall import XCall, call_callable
from .manifest import ClassDecl, ManifestModule, ManifestType, Param, parse_manifest

logger = logging.getLogger(__name__)

#: Stamped on every handle this runtime emits; fixed at build time.
RUNTIME_ID = 0x544142554C415231


class TabularError(RuntimeError):
    pass


class HandleError(TabularError):
    pass


# --------------------------------------------------------------------------
# built-in behavior catalog


class Counter:
    def __init__(self, start: int = 0) -> None:
        self.value = start

    def inc(self) -> None:
        self.value += 1


class Logger:
    def __init__(self, name: str) -> None:
        self.name = name
        self.messages: list[str] = []

    def error(self, message: str) -> None:
        self.messages.append(message)


class LogManager:
    @staticmethod
    def getLogger(name: str) -> Logger:
        return Logger(name)


def _div(x, y):
    return x / y


def _call_callback_binary_op(op: Callable, a, b):
    return op(a, b)


def _echo(value):
    return value


def _noop() -> None:
    return None


BUILTIN_CALLABLES: dict[str, Callable] = {
    "add": lambda x, y: x + y,
    "div": _div,
    "call_callback_binary_op": _call_callback_binary_op,
    "echo": _echo,
    "noop": _noop,
}

BUILTIN_CLASSES: dict[str, type] = {
    "Counter": Counter,
    "Logger": Logger,
    "LogManager": LogManager,
}


# --------------------------------------------------------------------------
# handle table


class HandleTable:
    """Pinned objects keyed by random nonzero 64-bit tokens. Entries
    survive until released; concurrent access is lock-guarded."""

    def __init__(self, seed: int | None = None) -> None:
        self._lock = threading.RLock()
        self._entries: dict[int, list] = {}  # key -> [object, pin_count]
        self._rng = random.Random(seed)

    def reseed(self, seed: int | None) -> None:
        with self._lock:
            self._rng = random.Random(seed)

    def register(self, obj: Any) -> HandleValue:
        with self._lock:
            while True:
                key = self._rng.getrandbits(64)
                if key != 0 and key not in self._entries:
                    break
            self._entries[key] = [obj, 1]
        return HandleValue(handle=key, runtime_id=RUNTIME_ID, release=_release_entrypoint)

    def _check(self, handle: HandleValue) -> None:
        if not isinstance(handle, HandleValue):
            raise HandleError("not a handle")
        if handle.runtime_id != RUNTIME_ID:
            raise HandleError(
                f"foreign handle: runtime_id {handle.runtime_id:#x} is not tabular's"
            )

    def resolve(self, handle: HandleValue) -> Any:
        self._check(handle)
        with self._lock:
            entry = self._entries.get(handle.handle)
            if entry is None:
                raise HandleError(f"stale handle: {handle.handle:#x}")
            return entry[0]

    def release(self, handle: HandleValue) -> None:
        self._check(handle)
        with self._lock:
            entry = self._entries.get(handle.handle)
            if entry is None:
                raise HandleError(f"stale handle: {handle.handle:#x}")
            entry[1] -= 1
            if entry[1] <= 0:
                del self._entries[handle.handle]

    def pin(self, handle: HandleValue) -> None:
        self._check(handle)
        with self._lock:
            entry = self._entries.get(handle.handle)
            if entry is None:
                raise HandleError(f"stale handle: {handle.handle:#x}")
            entry[1] += 1

    def size(self) -> int:
        with self._lock:
            return len(self._entries)

    def clear(self) -> None:
        with self._lock:
            self._entries.clear()


def _release_entrypoint(handle: HandleValue) -> None:
    """Release entrypoint stored on emitted handles. No error channel:
    failures are logged, never raised."""
    try:
        handle_table.release(handle)
    except Exception as exc:
        logger.warning("handle release failed: %s", exc)


_seed_env = os.environ.get("METAFFI_TABULAR_SEED")
handle_table = HandleTable(seed=int(_seed_env) if _seed_env else None)


# --------------------------------------------------------------------------
# runtime state

_state_lock = threading.Lock()
_loaded = False
init_count = 0
teardown_count = 0


@dataclass
class _Module:
    manifest: ManifestModule
    globals: dict[str, Any] = field(default_factory=dict)


_modules: dict[str, _Module] = {}
# id -> context; holding the object keeps ids stable for double-free checks
_live_contexts: dict[int, "XCallContext"] = {}


def live_context_count() -> int:
    return len(_live_contexts)


def load_runtime(err: ErrorSlot) -> None:
    """Initialize the guest. Repeated calls are a no-op beyond the first."""
    global _loaded, init_count
    with _state_lock:
        if _loaded:
            return
        _loaded = True
        init_count += 1


def free_runtime(err: ErrorSlot) -> None:
    """Tear the guest down: clears modules and the handle table."""
    global _loaded, teardown_count
    with _state_lock:
        if not _loaded:
            err.set("tabular runtime is not loaded")
            return
        _loaded = False
        teardown_count += 1
        _modules.clear()
        _live_contexts.clear()
        handle_table.clear()


def _get_module(module_path: str) -> _Module:
    key = str(Path(module_path).resolve())
    module = _modules.get(key)
    if module is not None:
        return module
    path = Path(module_path)
    if not path.is_file():
        raise TabularError(f"module not found: {module_path}")
    manifest = parse_manifest(path.read_text(encoding="utf-8"))
    module = _Module(manifest=manifest)
    for decl in manifest.globals:
        module.globals[decl.name] = decl.initial
    _modules[key] = module
    return module


# --------------------------------------------------------------------------
# entity resolution


@dataclass(eq=False)
class XCallContext:
    """Call-related data resolved at load time; immutable afterwards."""

    kind: str  # callable | constructor | method | global | field
    module: _Module
    params: tuple[MetaFFITypeInfo, ...]
    rets: tuple[MetaFFITypeInfo, ...]
    target: Any = None  # python callable / class / (class, decl) per kind
    cls: type | None = None
    name: str = ""
    instance_required: bool = False
    role: str = ""  # getter | setter for global/field kinds


def _tags_compatible(declared: MetaFFITypeInfo, manifest_param: Param) -> bool:
    d_base = base_type(declared.type)
    m_base = base_type(manifest_param.type.tag)
    if m_base is not ANY and d_base is not ANY and int(d_base) != int(m_base):
        return False
    d_dims = declared.dimensions if declared.dimensions != 0 or not is_array_type(declared.type) else -1
    m_dims = manifest_param.type.dimensions
    if d_dims != -1 and m_dims != -1 and d_dims != m_dims:
        return False
    return True


def _signature_matches(
    declared_params: Sequence[MetaFFITypeInfo],
    declared_rets: Sequence[MetaFFITypeInfo],
    manifest_params: Sequence[Param],
    manifest_rets: Sequence[Param],
) -> str | None:
    """None when compatible, else a description of the first mismatch."""
    if len(declared_params) != len(manifest_params):
        return f"expects {len(manifest_params)} parameter(s), {len(declared_params)} declared"
    if len(declared_rets) != len(manifest_rets):
        return f"returns {len(manifest_rets)} value(s), {len(declared_rets)} declared"
    for i, (d, m) in enumerate(zip(declared_params, manifest_params)):
        if not _tags_compatible(d, m):
            return (
                f"parameter {i} expects {m.type.text}, "
                f"declared {constant_to_type_name(d.type)}"
            )
    for i, (d, m) in enumerate(zip(declared_rets, manifest_rets)):
        if not _tags_compatible(d, m):
            return (
                f"return value {i} expects {m.type.text}, "
                f"declared {constant_to_type_name(d.type)}"
            )
    return None


def _handle_param(cls_name: str) -> Param:
    return Param(
        name="instance",
        type=ManifestType(text=f"handle({cls_name})", tag=HANDLE, alias=cls_name),
    )


def _pick_overload(candidates: list, fp: FunctionPath, declared_params, declared_rets, describe: str):
    explicit = fp.lookup("overload_index")
    if explicit is not None:
        wanted = int(explicit)
        for decl, m_params, m_rets in candidates:
            if decl.overload_index == wanted:
                mismatch = _signature_matches(declared_params, declared_rets, m_params, m_rets)
                if mismatch:
                    raise TabularError(f"signature mismatch: {describe} {mismatch}")
                return decl
        raise TabularError(f"entity not found: {describe} overload {wanted}")
    mismatches = []
    for decl, m_params, m_rets in candidates:
        mismatch = _signature_matches(declared_params, declared_rets, m_params, m_rets)
        if mismatch is None:
            return decl
        mismatches.append(mismatch)
    raise TabularError(f"signature mismatch: {describe} {mismatches[0]}")


def _resolve_class(module: _Module, cls_name: str) -> tuple[ClassDecl, type]:
    for cls_decl in module.manifest.classes:
        if cls_decl.name == cls_name:
            behavior = BUILTIN_CLASSES.get(cls_decl.simple_name)
            if behavior is None:
                raise TabularError(f"entity not found: {cls_decl.simple_name}")
            return cls_decl, behavior
    raise TabularError(f"entity not found: {cls_name}")


def load_entity(
    module_path: str,
    function_path: str,
    params: Sequence[MetaFFITypeInfo],
    rets: Sequence[MetaFFITypeInfo],
    err: ErrorSlot,
) -> XCall | None:
    try:
        return _load_entity(module_path, function_path, tuple(params), tuple(rets))
    except Exception as exc:
        err.set(str(exc) or type(exc).__name__)
        return None


def _load_entity(
    module_path: str,
    function_path: str,
    params: tuple[MetaFFITypeInfo, ...],
    rets: tuple[MetaFFITypeInfo, ...],
) -> XCall:
    if not _loaded:
        raise TabularError("tabular runtime is not loaded")
    fp = parse_function_path(function_path)
    module = _get_module(module_path)

    cls_name = fp.lookup("class")
    callable_name = fp.lookup("callable")
    global_name = fp.lookup("global")
    field_name = fp.lookup("field")

    if global_name is not None:
        context = _resolve_global(module, global_name, fp, params, rets)
    elif cls_name is not None and field_name is not None:
        context = _resolve_field(module, cls_name, field_name, fp, params, rets)
    elif cls_name is not None and callable_name is not None:
        if callable_name == "<init>":
            context = _resolve_constructor(module, cls_name, fp, params, rets)
        else:
            context = _resolve_method(module, cls_name, callable_name, fp, params, rets)
    elif callable_name is not None:
        context = _resolve_callable(module, callable_name, fp, params, rets)
    else:
        raise TabularError(
            f"function path {function_path!r} names no entity "
            "(expected callable=, global=, or class= keys)"
        )

    entrypoint = ENTRYPOINTS[select_entrypoint(len(params), len(rets))]
    _live_contexts[id(context)] = context
    return XCall(entrypoint=entrypoint, context=context)


def _resolve_callable(module, name, fp, params, rets) -> XCallContext:
    decls = [c for c in module.manifest.callables if c.name == name]
    if not decls:
        raise TabularError(f"entity not found: {name}")
    behavior = BUILTIN_CALLABLES.get(name)
    if behavior is None:
        raise TabularError(f"entity not found: {name}")
    _pick_overload([(d, d.params, d.rets) for d in decls], fp, params, rets, name)
    return XCallContext(
        kind="callable", module=module, params=params, rets=rets,
        target=behavior, name=name,
    )


def _resolve_constructor(module, cls_name, fp, params, rets) -> XCallContext:
    cls_decl, behavior = _resolve_class(module, cls_name)
    if not cls_decl.constructors:
        raise TabularError(f"entity not found: {cls_name}.<init>")
    _pick_overload(
        [(d, d.params, d.rets) for d in cls_decl.constructors],
        fp, params, rets, f"{cls_decl.simple_name}.<init>",
    )
    return XCallContext(
        kind="constructor", module=module, params=params, rets=rets,
        target=behavior, cls=behavior, name=f"{cls_decl.simple_name}.<init>",
    )


def _resolve_method(module, cls_name, method_name, fp, params, rets) -> XCallContext:
    cls_decl, behavior = _resolve_class(module, cls_name)
    decls = [m for m in cls_decl.methods if m.name == method_name]
    if not decls:
        raise TabularError(f"entity not found: {method_name}")
    instance_required = fp.has_tag("instance_required")
    static = decls[0].static
    if static and instance_required:
        raise TabularError(f"{method_name} is static; instance_required does not apply")
    if not static and not instance_required:
        raise TabularError(f"{method_name} requires the instance_required tag")
    candidates = []
    for d in decls:
        m_params = d.params if static else (_handle_param(cls_decl.simple_name),) + d.params
        candidates.append((d, m_params, d.rets))
    _pick_overload(candidates, fp, params, rets, f"{cls_decl.simple_name}.{method_name}")
    if not hasattr(behavior, method_name):
        raise TabularError(f"entity not found: {method_name}")
    return XCallContext(
        kind="method", module=module, params=params, rets=rets,
        target=method_name, cls=behavior, name=method_name,
        instance_required=not static,
    )


def _resolve_field(module, cls_name, field_name, fp, params, rets) -> XCallContext:
    cls_decl, behavior = _resolve_class(module, cls_name)
    decl = next((f for f in cls_decl.fields if f.name == field_name), None)
    if decl is None:
        raise TabularError(f"entity not found: {field_name}")
    if not fp.has_tag("instance_required"):
        raise TabularError(f"field {field_name} requires the instance_required tag")
    role = _accessor_role(fp, f"{cls_decl.simple_name}.{field_name}")
    if role == "setter" and decl.readonly:
        raise TabularError(f"field {field_name} is read-only")
    instance = _handle_param(cls_decl.simple_name)
    if role == "getter":
        m_params, m_rets = (instance,), (Param(field_name, decl.type),)
    else:
        m_params, m_rets = (instance, Param(field_name, decl.type)), ()
    mismatch = _signature_matches(params, rets, m_params, m_rets)
    if mismatch:
        raise TabularError(f"signature mismatch: {field_name} {mismatch}")
    return XCallContext(
        kind="field", module=module, params=params, rets=rets,
        target=field_name, cls=behavior, name=field_name,
        instance_required=True, role=role,
    )


def _resolve_global(module, global_name, fp, params, rets) -> XCallContext:
    decl = next((g for g in module.manifest.globals if g.name == global_name), None)
    if decl is None:
        raise TabularError(f"entity not found: {global_name}")
    role = _accessor_role(fp, global_name)
    if role == "setter" and decl.readonly:
        raise TabularError(f"global {global_name} is read-only")
    if role == "getter":
        m_params, m_rets = (), (Param(global_name, decl.type),)
    else:
        m_params, m_rets = (Param(global_name, decl.type),), ()
    mismatch = _signature_matches(params, rets, m_params, m_rets)
    if mismatch:
        raise TabularError(f"signature mismatch: {global_name} {mismatch}")
    return XCallContext(
        kind="global", module=module, params=params, rets=rets,
        target=global_name, name=global_name, role=role,
    )


def _accessor_role(fp: FunctionPath, describe: str) -> str:
    getter = fp.has_tag("getter")
    setter = fp.has_tag("setter")
    if getter == setter:
        raise TabularError(f"{describe}: exactly one of getter/setter tags required")
    return "getter" if getter else "setter"


# --------------------------------------------------------------------------
# invocation


def make_callable(
    token: Any,
    params: Sequence[MetaFFITypeInfo],
    rets: Sequence[MetaFFITypeInfo],
    err: ErrorSlot,
) -> XCall | None:
    """Wrap a live callable token as an XCall without locating it.

    Accepted tokens: a (module_path, callable_name) pair naming a registry
    callable, or a CallableValue re-wrap from another runtime.
    """
    try:
        if not _loaded:
            raise TabularError("tabular runtime is not loaded")
        params = tuple(params)
        rets = tuple(rets)
        if isinstance(token, CallableValue):
            context = XCallContext(
                kind="callable", module=None, params=params, rets=rets,
                target=lambda *args: call_callable(token, args), name="<rewrap>",
            )
        elif (
            isinstance(token, tuple)
            and len(token) == 2
            and all(isinstance(part, str) for part in token)
        ):
            module = _get_module(token[0])
            context = _resolve_callable(module, token[1], FunctionPath(), params, rets)
        else:
            raise TabularError(f"invalid callable token: {token!r}")
        entrypoint = ENTRYPOINTS[select_entrypoint(len(params), len(rets))]
        _live_contexts[id(context)] = context
        return XCall(entrypoint=entrypoint, context=context)
    except Exception as exc:
        err.set(str(exc) or type(exc).__name__)
        return None


def free_xcall(xcall: XCall, err: ErrorSlot) -> None:
    """Release an XCall's context. Freeing twice is an error."""
    try:
        if xcall is None:
            raise TabularError("null xcall")
        if xcall.context is None:
            return  # nothing owned
        if id(xcall.context) not in _live_contexts:
            raise TabularError("xcall already freed or foreign")
        del _live_contexts[id(xcall.context)]
    except Exception as exc:
        err.set(str(exc) or type(exc).__name__)


def _decode_argument(cell: CDT) -> Any:
    """Guest-side view of an argument: own handles resolve to live objects,
    foreign handles stay opaque, callables become python callables."""
    base = base_type(cell.type)
    if not is_array_type(cell.type):
        if base is HANDLE:
            value: HandleValue = cell.value
            if value.runtime_id == RUNTIME_ID:
                return handle_table.resolve(value)
            return value
        if base is CALLABLE:
            cv: CallableValue = cell.value
            return lambda *args: call_callable(cv, args)
    return decode(cell)


def _encode_result(cell: CDT, value: Any, info: MetaFFITypeInfo) -> None:
    """Guest-side marshalling of one return value: guest objects leave as
    pinned handles."""
    base = base_type(info.type)
    if value is not None and not is_array_type(info.type):
        is_plain = isinstance(value, (bool, int, float, str, list, tuple, HandleValue, CallableValue))
        if base is HANDLE and not isinstance(value, HandleValue):
            value = handle_table.register(value)
        elif base is ANY and not is_plain:
            value = handle_table.register(value)
    encode_into(cell, value, info)


def _invoke(context: XCallContext, args: list[Any]) -> Any:
    if context.kind == "callable":
        return context.target(*args)
    if context.kind == "constructor":
        return context.cls(*args)
    if context.kind == "method":
        if context.instance_required:
            instance, rest = args[0], args[1:]
            if not isinstance(instance, context.cls):
                raise TabularError(
                    f"instance argument is not a {context.cls.__name__}"
                )
            return getattr(instance, context.target)(*rest)
        return getattr(context.cls, context.target)(*args)
    if context.kind == "global":
        if context.role == "getter":
            return context.module.globals[context.target]
        context.module.globals[context.target] = args[0]
        return None
    if context.kind == "field":
        instance, rest = args[0], args[1:]
        if not isinstance(instance, context.cls):
            raise TabularError(f"instance argument is not a {context.cls.__name__}")
        if context.role == "getter":
            return getattr(instance, context.target)
        setattr(instance, context.target, rest[0])
        return None
    raise TabularError(f"unknown context kind {context.kind!r}")


def _dispatch(context: XCallContext, pcdts, out_err: ErrorSlot) -> None:
    try:
        if id(context) not in _live_contexts:
            raise TabularError("xcall context is not live")
        if context.instance_required and pcdts is not None and pcdts[0].length > 0:
            first = pcdts[0][0]
            if base_type(first.type) is not HANDLE or is_array_type(first.type):
                raise TabularError(
                    "instance_required entity expects a handle as first argument"
                )
        args = [] if pcdts is None else [_decode_argument(c) for c in pcdts[0].arr]
        result = _invoke(context, args)
        rets = context.rets
        if rets:
            results = result if isinstance(result, tuple) and len(rets) > 1 else (result,)
            if len(results) != len(rets):
                raise TabularError(
                    f"{context.name} produced {len(results)} value(s), {len(rets)} declared"
                )
            for cell, value, info in zip(pcdts[1].arr, results, rets):
                _encode_result(cell, value, info)
    except Exception as exc:
        out_err.set(str(exc) or type(exc).__name__)


# The four entrypoint variants exported by the plugin.

def xcall_params_ret(context, pcdts, out_err) -> None:
    _dispatch(context, pcdts, out_err)


def xcall_params_no_ret(context, pcdts, out_err) -> None:
    _dispatch(context, pcdts, out_err)


def xcall_no_params_ret(context, pcdts, out_err) -> None:
    _dispatch(context, pcdts, out_err)


def xcall_no_params_no_ret(context, out_err) -> None:
    _dispatch(context, None, out_err)


ENTRYPOINTS = {
    "xcall_params_ret": xcall_params_ret,
    "xcall_params_no_ret": xcall_params_no_ret,
    "xcall_no_params_ret": xcall_no_params_ret,
    "xcall_no_params_no_ret": xcall_no_params_no_ret,
}
