"""Runtime plugin: JavaScript entities living in the enclosing Node process.

This plugin only ever ATTACHES to a JavaScript environment; it cannot start
one. The TypeScript side embeds the Python interpreter, imports this module
through the plugin loader, and installs a small table of JS functions via
set_js_bridge(). From then on the host side of the bridge is ordinary
MetaFFI: load_entity returns XCalls whose entrypoints marshal CDT cells to
plain values and hand them across.

Value convention at the JS boundary (everything crosses by value):
  - numbers, strings, bools, None, and nested lists pass as-is
  - a JS-owned object is the marker {"__js_object": id}; the id indexes the
    JS side's pin table and becomes a HandleValue stamped with this
    runtime's id
  - a foreign handle is {"__foreign": token}; a callable is
    {"__callable": token} and the JS side wraps it in a function calling
    call_foreign_callable(token, args). Tokens are call-scoped: they die
    when the xcall that minted them returns, so JS code must not stash
    them (later use raises "stale foreign token")

All calls run on the Node main thread (the embedder serializes everything
through the interpreter lock), so xcalls into this plugin may block.
"""

from __future__ import annotations

import itertools
import logging
import threading
from dataclasses import dataclass
from typing import Any, Sequence

from metaffi.allocator import ErrorSlot
from metaffi.cdt import CDT, CallableValue, HandleValue, decode, encode_into
from metaffi.function_path import parse_function_path
from metaffi.types import (
    CALLABLE,
    HANDLE,
    MetaFFITypeInfo,
    base_type,
    is_array_type,
)
from metaffi.xcall import XCall, call_callable

logger = logging.getLogger(__name__)

runtime_id = 0x4E4F444552554E31  # "NODERUN1"

_lock = threading.RLock()
_js: dict[str, Any] | None = None  # bridge table installed by the JS side
_attached = False
_tokens = itertools.count(1)
_foreign: dict[int, Any] = {}  # token -> HandleValue | CallableValue
_live_contexts: dict[int, "_Context"] = {}
_scopes = threading.local()  # per-thread stack of token lists


class NodeBridgeError(RuntimeError):
    pass


def set_js_bridge(table: dict[str, Any]) -> None:
    """Install the JS function table: load_entity, invoke, free_entity,
    release_object, pinned_count. Called by the embedder before any use."""
    global _js
    required = ("load_entity", "invoke", "free_entity", "release_object", "pinned_count")
    missing = [name for name in required if name not in table]
    if missing:
        raise NodeBridgeError(f"js bridge table is missing {missing[0]!r}")
    with _lock:
        _js = dict(table)


def load_runtime(err: ErrorSlot) -> None:
    """Attach to the JS environment. Idempotent; never initializes one."""
    global _attached
    with _lock:
        if _attached:
            return
        if _js is None:
            err.set(
                "no JavaScript environment attached; load the bridge from "
                "Node before using the 'node' runtime"
            )
            return
        _attached = True


def free_runtime(err: ErrorSlot) -> None:
    """Detach: drop entities and foreign pins. The JS environment itself is
    not ours to finalize (we only ever attached to it)."""
    global _attached
    with _lock:
        if not _attached:
            err.set("node runtime is not attached")
            return
        _attached = False
        _foreign.clear()
        contexts = list(_live_contexts.values())
        _live_contexts.clear()
        js = _js
    for context in contexts:  # entities the host never freed explicitly
        try:
            js["free_entity"](context.entity_id)
        except Exception:
            logger.exception("detach cleanup of %s failed", context.describe)


@dataclass(eq=False)
class _Context:
    entity_id: int
    params: tuple[MetaFFITypeInfo, ...]
    rets: tuple[MetaFFITypeInfo, ...]
    describe: str


def _release_js_object(handle: HandleValue) -> None:
    try:
        _require_js()["release_object"](handle.handle)
    except Exception:
        logger.exception("release of js object %#x failed", handle.handle)


def _require_js() -> dict[str, Any]:
    if _js is None:
        raise NodeBridgeError("js bridge is not installed")
    return _js


def _pin_foreign(value: Any) -> int:
    token = next(_tokens)
    _foreign[token] = value
    stack = getattr(_scopes, "stack", None)
    if stack:
        stack[-1].append(token)
    return token


def _push_scope() -> list[int]:
    if not hasattr(_scopes, "stack"):
        _scopes.stack = []
    scope: list[int] = []
    _scopes.stack.append(scope)
    return scope


def _pop_scope(scope: list[int]) -> None:
    _scopes.stack.pop()
    for token in scope:
        _foreign.pop(token, None)


def call_foreign_callable(token: int, args: Sequence[Any]) -> Any:
    """Entry for JS-side callable wrappers: invoke a foreign CallableValue
    that earlier crossed into JS as a {"__callable": token} marker."""
    value = _foreign.get(token)
    if not isinstance(value, CallableValue):
        raise NodeBridgeError(f"unknown callable token {token}")
    result = call_callable(value, [_from_js(a, None) for a in args])
    if isinstance(result, tuple):
        return [_to_js(v) for v in result]
    return _to_js(result) if result is not None else None


def _to_js(value: Any) -> Any:
    if isinstance(value, HandleValue):
        if value.runtime_id == runtime_id:
            return {"__js_object": value.handle}
        return {"__foreign": _pin_foreign(value)}
    if isinstance(value, CallableValue):
        return {"__callable": _pin_foreign(value)}
    if isinstance(value, (list, tuple)):
        return [_to_js(v) for v in value]
    return value


def _from_js(value: Any, info: MetaFFITypeInfo | None) -> Any:
    if isinstance(value, dict):
        if "__js_object" in value:
            return HandleValue(
                handle=int(value["__js_object"]),
                runtime_id=runtime_id,
                release=_release_js_object,
            )
        if "__foreign" in value:
            token = int(value["__foreign"])
            if token not in _foreign:
                raise NodeBridgeError(f"stale foreign token {token}")
            return _foreign[token]
        raise NodeBridgeError(f"unknown marker from js: {sorted(value)}")
    if isinstance(value, list):
        return [_from_js(v, None) for v in value]
    return value


def _decode_argument(cell: CDT) -> Any:
    value = decode(cell)
    return _to_js(value)


def load_entity(
    module_path: str,
    function_path: str,
    params: Sequence[MetaFFITypeInfo],
    rets: Sequence[MetaFFITypeInfo],
    err: ErrorSlot,
) -> XCall | None:
    try:
        with _lock:
            if not _attached:
                raise NodeBridgeError("node runtime is not attached")
            js = _require_js()
        fp = parse_function_path(function_path)
        callable_name = fp.lookup("callable")
        attribute_name = fp.lookup("attribute")
        if callable_name is None and attribute_name is None:
            raise NodeBridgeError(
                f"function path needs callable= or attribute=: {function_path!r}"
            )
        if attribute_name is not None and not (fp.has_tag("getter") or fp.has_tag("setter")):
            raise NodeBridgeError(
                f"attribute path needs getter or setter: {function_path!r}"
            )
        spec = {
            "kind": "callable" if callable_name is not None else "attribute",
            "name": callable_name or attribute_name,
            "instanceRequired": fp.has_tag("instance_required"),
            "role": "setter" if fp.has_tag("setter") else "getter",
        }
        entity_id = int(js["load_entity"](module_path, spec))
        params = tuple(params)
        rets = tuple(rets)
        context = _Context(
            entity_id=entity_id,
            params=params,
            rets=rets,
            describe=f"{function_path} in {module_path}",
        )
        entrypoint = _ENTRYPOINTS[
            (len(params) > 0 or None, len(rets) > 0 or None)
        ]
        xcall = XCall(entrypoint=entrypoint, context=context)
        with _lock:
            _live_contexts[id(context)] = context
        return xcall
    except Exception as exc:
        err.set(str(exc) or type(exc).__name__)
        return None


def make_callable(token: Any, params, rets, err: ErrorSlot) -> XCall | None:
    """Re-wrap a CallableValue that reached the host; JS functions
    themselves come across as callable markers, never raw."""
    try:
        if isinstance(token, CallableValue):
            return token.xcall
        raise NodeBridgeError(f"cannot wrap token of type {type(token).__name__}")
    except Exception as exc:
        err.set(str(exc) or type(exc).__name__)
        return None


def free_xcall(xcall: XCall, err: ErrorSlot) -> None:
    try:
        with _lock:
            context = _live_contexts.pop(id(xcall.context), None)
        if context is None:
            raise NodeBridgeError("xcall already freed or foreign")
        _require_js()["free_entity"](context.entity_id)
    except Exception as exc:
        err.set(str(exc) or type(exc).__name__)


def _dispatch(context: _Context, pcdts, out_err: ErrorSlot) -> None:
    scope = _push_scope()
    try:
        with _lock:
            if id(context) not in _live_contexts:
                raise NodeBridgeError("xcall context is not live")
            js = _require_js()
        args = [] if pcdts is None else [_decode_argument(c) for c in pcdts[0].arr]
        result = js["invoke"](context.entity_id, args)
        if context.rets:
            # js arrays come back as lists; a list is only a multi-return
            # when more than one value is declared (mirrors the host side,
            # where a lone tuple is a value and not an unpacking)
            if len(context.rets) > 1 and isinstance(result, (list, tuple)):
                results = list(result)
            else:
                results = [result]
            if len(results) != len(context.rets):
                raise NodeBridgeError(
                    f"{context.describe} produced {len(results)} value(s), "
                    f"{len(context.rets)} declared"
                )
            for cell, value, info in zip(pcdts[1].arr, results, context.rets):
                encode_into(cell, _from_js(value, info), info)
    except Exception as exc:
        out_err.set(str(exc) or type(exc).__name__)
    finally:
        _pop_scope(scope)


def xcall_params_ret(context, pcdts, out_err) -> None:
    _dispatch(context, pcdts, out_err)


def xcall_params_no_ret(context, pcdts, out_err) -> None:
    _dispatch(context, pcdts, out_err)


def xcall_no_params_ret(context, pcdts, out_err) -> None:
    _dispatch(context, pcdts, out_err)


def xcall_no_params_no_ret(context, out_err) -> None:
    _dispatch(context, None, out_err)


_ENTRYPOINTS = {
    (True, True): xcall_params_ret,
    (True, None): xcall_params_no_ret,
    (None, True): xcall_no_params_ret,
    (None, None): xcall_no_params_no_ret,
}


def foreign_pin_count() -> int:
    """Oracle: foreign values currently pinned for the JS side."""
    return len(_foreign)


def live_context_count() -> int:
    return len(_live_contexts)
