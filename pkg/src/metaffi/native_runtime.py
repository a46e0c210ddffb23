"""Shallow-binding runtime plugin: platform shared libraries as guests.

Exported symbols become XCalls through pre-built trampolines. The signature
whitelist is deliberately small: parameters and the single optional return
value are drawn from {int64, float64, string8}, arity at most 8, scalars
only. Anything else is rejected at load time with an error naming the
offending type. No callbacks into native code; make_callable is not
supported.

Returned strings are borrowed from the library and copied immediately;
string parameters are passed as UTF-8 and the library must not keep the
pointer past the call.
"""

from __future__ import annotations

import ctypes
import threading
from dataclasses import dataclass

from .allocator import default_allocator
from .cdt import decode, encode_into
from .function_path import FunctionPathError, parse_function_path
from .plugin_abi import select_entrypoint
from .types import MetaFFITypeInfo, MetaFFITypes, constant_to_type_name

RUNTIME_ID = 0x4E41544956453031

MAX_ARITY = 8

_CTYPES = {
    MetaFFITypes.metaffi_int64_type: ctypes.c_int64,
    MetaFFITypes.metaffi_float64_type: ctypes.c_double,
    MetaFFITypes.metaffi_string8_type: ctypes.c_char_p,
}


class NativeError(RuntimeError):
    pass


_lock = threading.Lock()
_loaded = False
_libraries: dict[str, ctypes.CDLL] = {}
_live_contexts: dict[int, "NativeContext"] = {}


@dataclass(eq=False)
class NativeContext:
    cfunc: object
    symbol: str
    params: tuple[MetaFFITypeInfo, ...]
    rets: tuple[MetaFFITypeInfo, ...]


def live_context_count() -> int:
    return len(_live_contexts)


def load_runtime(err) -> None:
    global _loaded
    with _lock:
        _loaded = True


def free_runtime(err) -> None:
    global _loaded
    with _lock:
        if not _loaded:
            err.set("native runtime is not loaded")
            return
        _loaded = False
        _libraries.clear()
        _live_contexts.clear()


def _check_signature(params, rets) -> None:
    if len(params) > MAX_ARITY:
        raise NativeError(
            f"unsupported signature: arity {len(params)} exceeds {MAX_ARITY}"
        )
    if len(rets) > 1:
        raise NativeError(
            f"unsupported signature: {len(rets)} return values (at most 1)"
        )
    for label, infos in (("parameter", params), ("return value", rets)):
        for i, info in enumerate(infos):
            if info.dimensions != 0 or info.type not in _CTYPES:
                raise NativeError(
                    f"unsupported signature: {label} {i} type "
                    f"{constant_to_type_name(info.type)}"
                )


def _library(path: str) -> ctypes.CDLL:
    lib = _libraries.get(path)
    if lib is None:
        try:
            lib = ctypes.CDLL(path)
        except OSError as exc:
            raise NativeError(f"cannot load library {path!r}: {exc}") from None
        _libraries[path] = lib
    return lib


def _to_native(info: MetaFFITypeInfo, value):
    if info.type is MetaFFITypes.metaffi_string8_type:
        return value.encode("utf-8")
    return value


def _from_native(info: MetaFFITypeInfo, value):
    if info.type is MetaFFITypes.metaffi_string8_type:
        return "" if value is None else value.decode("utf-8")
    return value


def _call(context: NativeContext, pcdts, out_err) -> None:
    try:
        native_args = []
        if context.params:
            for i, info in enumerate(context.params):
                native_args.append(_to_native(info, decode(pcdts[0][i])))
        result = context.cfunc(*native_args)
        if context.rets:
            encode_into(
                pcdts[1][0],
                _from_native(context.rets[0], result),
                context.rets[0],
                default_allocator,
            )
    except Exception as exc:
        out_err.set(str(exc) or type(exc).__name__)


def xcall_params_ret(context, pcdts, out_err):
    _call(context, pcdts, out_err)


def xcall_params_no_ret(context, pcdts, out_err):
    _call(context, pcdts, out_err)


def xcall_no_params_ret(context, pcdts, out_err):
    _call(context, pcdts, out_err)


def xcall_no_params_no_ret(context, out_err):
    _call(context, None, out_err)


ENTRYPOINTS = {
    "xcall_params_ret": xcall_params_ret,
    "xcall_params_no_ret": xcall_params_no_ret,
    "xcall_no_params_ret": xcall_no_params_ret,
    "xcall_no_params_no_ret": xcall_no_params_no_ret,
}


def load_entity(module_path, function_path, params, rets, err):
    from .xcall import XCall

    try:
        if not _loaded:
            raise NativeError("native runtime is not loaded")
        try:
            fp = parse_function_path(function_path)
        except FunctionPathError as exc:
            raise NativeError(str(exc)) from None
        symbol = fp.lookup("callable")
        if symbol is None:
            raise NativeError(
                f"function path {function_path!r} names no entity (callable= required)"
            )
        params = tuple(params)
        rets = tuple(rets)
        _check_signature(params, rets)
        lib = _library(module_path)
        try:
            cfunc = getattr(lib, symbol)
        except AttributeError:
            raise NativeError(f"symbol not found: {symbol}") from None
        cfunc.argtypes = [_CTYPES[p.type] for p in params]
        cfunc.restype = _CTYPES[rets[0].type] if rets else None
        context = NativeContext(cfunc=cfunc, symbol=symbol, params=params, rets=rets)
        entrypoint = ENTRYPOINTS[select_entrypoint(len(params), len(rets))]
        xcall = XCall(entrypoint, context=context)
        with _lock:
            _live_contexts[id(context)] = context
        return xcall
    except NativeError as exc:
        err.set(str(exc))
        return None


def make_callable(token, params, rets, err):
    err.set("make_callable is not supported by the native plugin")
    return None


def free_xcall(xcall, err) -> None:
    if xcall is None:
        err.set("null xcall")
        return
    context = xcall.context
    if context is None:
        return
    with _lock:
        if id(context) not in _live_contexts:
            err.set("xcall already freed or foreign")
            return
        del _live_contexts[id(context)]
