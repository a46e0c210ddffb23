"""Idiomatic host API hiding the CDT/XCall plumbing.

    runtime = MetaFFIRuntime("tabular")
    runtime.load_runtime_plugin()
    module = runtime.load_module("corpus.tabular")
    add = module.load("callable=add", [TypeInfo(INT64), TypeInfo(INT64)], [TypeInfo(INT64)])
    assert add(1, 2) == 3

make_callable wraps a host function as a CallableValue so guests can call
back into the host: the host side plays its own runtime-plugin role via a
trampoline entrypoint with the standard ABI shapes.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Any, Callable, Sequence

from . import xllr
from .allocator import Allocator, ErrorSlot, default_allocator
from .cdt import CallableValue, HandleValue, decode, encode_into
from .types import MetaFFITypeInfo, MetaFFITypes
from .xcall import XCall, alloc_cdts_buffer, free_cdts_buffer, invoke_xcall

logger = logging.getLogger(__name__)


class MetaFFIError(RuntimeError):
    pass


@dataclass(eq=False)
class _HostCallableContext:
    fn: Callable
    params: tuple[MetaFFITypeInfo, ...]
    rets: tuple[MetaFFITypeInfo, ...]


def _host_entry_with_data(context: _HostCallableContext, pcdts, out_err: ErrorSlot) -> None:
    """Entrypoint for host callables taking or returning data."""
    try:
        args = [decode(cell) for cell in pcdts[0].arr]
        result = context.fn(*args)
        if context.rets:
            results = (
                result
                if isinstance(result, tuple) and len(context.rets) > 1
                else (result,)
            )
            if len(results) != len(context.rets):
                raise MetaFFIError(
                    f"host callable produced {len(results)} value(s), "
                    f"{len(context.rets)} declared"
                )
            for cell, value, info in zip(pcdts[1].arr, results, context.rets):
                encode_into(cell, value, info)
    except Exception as exc:
        out_err.set(str(exc) or type(exc).__name__)


def _host_entry_no_data(context: _HostCallableContext, out_err: ErrorSlot) -> None:
    try:
        context.fn()
    except Exception as exc:
        out_err.set(str(exc) or type(exc).__name__)


def make_host_callable(
    fn: Callable,
    param_types: Sequence[MetaFFITypes | MetaFFITypeInfo],
    ret_types: Sequence[MetaFFITypes | MetaFFITypeInfo],
) -> CallableValue:
    """Wrap a host function as a CallableValue passable to any runtime."""
    params = tuple(
        t if isinstance(t, MetaFFITypeInfo) else MetaFFITypeInfo(t) for t in param_types
    )
    rets = tuple(
        t if isinstance(t, MetaFFITypeInfo) else MetaFFITypeInfo(t) for t in ret_types
    )
    context = _HostCallableContext(fn=fn, params=params, rets=rets)
    entrypoint = _host_entry_no_data if not params and not rets else _host_entry_with_data
    xcall = XCall(entrypoint=entrypoint, context=context)
    return CallableValue(
        xcall=xcall,
        parameter_types=tuple(p.type for p in params),
        retval_types=tuple(r.type for r in rets),
    )


class Caller:
    """Callable wrapper around one loaded entity."""

    def __init__(
        self,
        runtime: "MetaFFIRuntime",
        xcall: XCall,
        params: tuple[MetaFFITypeInfo, ...],
        rets: tuple[MetaFFITypeInfo, ...],
        function_path: str,
        allocator: Allocator,
    ) -> None:
        self._runtime = runtime
        self.xcall = xcall
        self.params = params
        self.rets = rets
        self.function_path = function_path
        self._allocator = allocator

    def __call__(self, *args: Any) -> Any:
        if len(args) != len(self.params):
            raise MetaFFIError(
                f"{self.function_path!r} expects {len(self.params)} "
                f"argument(s), got {len(args)}"
            )
        if not self.params and not self.rets:
            invoke_xcall(self.xcall, None, self._allocator)
            return None
        pair = alloc_cdts_buffer(len(self.params), len(self.rets), self._allocator)
        try:
            for cell, arg, info in zip(pair[0].arr, args, self.params):
                encode_into(cell, arg, info, self._allocator)
            invoke_xcall(self.xcall, pair, self._allocator)
            results = tuple(decode(cell, self._allocator) for cell in pair[1].arr)
        finally:
            free_cdts_buffer(pair, self._allocator)
        if not results:
            return None
        return results[0] if len(results) == 1 else results

    def free(self) -> None:
        """Release the entity's plugin-side context."""
        xllr.free_xcall(self._runtime.plugin_name, self.xcall)


class MetaFFIModule:
    def __init__(self, runtime: "MetaFFIRuntime", module_path: str) -> None:
        self.runtime = runtime
        self.module_path = module_path

    def load(
        self,
        function_path: str,
        params: Sequence[MetaFFITypes | MetaFFITypeInfo] = (),
        rets: Sequence[MetaFFITypes | MetaFFITypeInfo] = (),
    ) -> Caller:
        """Load one entity; returns an idiomatic callable."""
        params = tuple(
            t if isinstance(t, MetaFFITypeInfo) else MetaFFITypeInfo(t) for t in params
        )
        rets = tuple(
            t if isinstance(t, MetaFFITypeInfo) else MetaFFITypeInfo(t) for t in rets
        )
        xcall = xllr.load_function(
            self.runtime.plugin_name, self.module_path, function_path, params, rets
        )
        return Caller(
            runtime=self.runtime,
            xcall=xcall,
            params=params,
            rets=rets,
            function_path=function_path,
            allocator=self.runtime.allocator,
        )


class MetaFFIRuntime:
    def __init__(self, runtime_plugin_name: str, allocator: Allocator | None = None) -> None:
        self.plugin_name = runtime_plugin_name
        self.allocator = allocator or default_allocator

    def load_runtime_plugin(self) -> None:
        xllr.load_runtime_plugin(self.plugin_name)

    def release_runtime_plugin(self) -> None:
        xllr.free_runtime_plugin(self.plugin_name)

    def load_module(self, module_path: str) -> MetaFFIModule:
        return MetaFFIModule(self, module_path)

    def make_callable(
        self,
        fn: Callable,
        param_types: Sequence[MetaFFITypes | MetaFFITypeInfo],
        ret_types: Sequence[MetaFFITypes | MetaFFITypeInfo],
    ) -> CallableValue:
        """Wrap a host function for handing to guests as a callable value."""
        return make_host_callable(fn, param_types, ret_types)


def release_handle(value: HandleValue) -> None:
    """Ask the originating runtime to unpin a handle's object. Failures are
    the runtime's to report (release entrypoints log, they do not raise)."""
    value.release_object()
