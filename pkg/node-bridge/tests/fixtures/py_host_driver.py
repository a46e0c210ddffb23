"""Python-host scenarios for the node bridge tests.

The vitest suite imports this module into the embedded interpreter and
calls these functions to drive the 'node' runtime the same way any python
host would, including the reference-count oracles that only make sense
measured from inside the interpreter.
"""

import sys

from metaffi.api import MetaFFIRuntime, make_host_callable, release_handle
from metaffi.types import CALLABLE, HANDLE, INT64, STRING8, MetaFFITypeInfo


def mul_via_node(guest_path: str) -> int:
    rt = MetaFFIRuntime("node")
    rt.load_runtime_plugin()
    try:
        mod = rt.load_module(guest_path)
        mul = mod.load("callable=mul", [INT64, INT64], [INT64])
        try:
            return mul(6, 7)
        finally:
            mul.free()
    finally:
        rt.release_runtime_plugin()


def nested_callback_roundtrip(guest_path: str) -> int:
    """python -> JS -> python callback, crossing the boundary twice."""
    rt = MetaFFIRuntime("node")
    rt.load_runtime_plugin()
    try:
        mod = rt.load_module(guest_path)
        call_op = mod.load(
            "callable=call_callback_binary_op", [CALLABLE, INT64, INT64], [INT64]
        )
        try:
            cb = make_host_callable(lambda a, b: a + b, [INT64, INT64], [INT64])
            return call_op(cb, 1, 2)
        finally:
            call_op.free()
    finally:
        rt.release_runtime_plugin()


def handle_lifecycle(guest_path: str) -> dict:
    """JS object as handle: construct, method, attribute get/set, release."""
    rt = MetaFFIRuntime("node")
    rt.load_runtime_plugin()
    out: dict = {}
    try:
        mod = rt.load_module(guest_path)
        handle_info = MetaFFITypeInfo(HANDLE, alias="Counter")
        new_counter = mod.load("callable=make_counter", [INT64], [handle_info])
        inc = mod.load("callable=inc,instance_required", [handle_info, INT64], [INT64])
        get_count = mod.load(
            "attribute=count,instance_required,getter", [handle_info], [INT64]
        )
        set_motto = mod.load(
            "attribute=motto,instance_required,setter", [handle_info, STRING8], []
        )
        get_motto = mod.load(
            "attribute=motto,instance_required,getter", [handle_info], [STRING8]
        )
        callers = [new_counter, inc, get_count, set_motto, get_motto]
        try:
            counter = new_counter(40)
            # the id is 64-bit; compare here so the js side never sees a BigInt
            out["stamped_by_node"] = counter.runtime_id == 0x4E4F444552554E31
            out["after_inc"] = inc(counter, 2)
            out["count"] = get_count(counter)
            set_motto(counter, "onwards")
            out["motto"] = get_motto(counter)
            release_handle(counter)
        finally:
            for caller in callers:
                caller.free()
    finally:
        rt.release_runtime_plugin()
    return out


def callable_refcount_cycles(guest_path: str, n: int) -> dict:
    """Reference count of one callable crossing into JS n times.

    The callable is minted once; every crossing pins it for the duration of
    the call only, so the count measured before the loop must equal the
    count measured after.
    """
    rt = MetaFFIRuntime("node")
    rt.load_runtime_plugin()
    try:
        mod = rt.load_module(guest_path)
        call_op = mod.load(
            "callable=call_callback_binary_op", [CALLABLE, INT64, INT64], [INT64]
        )
        try:
            cb = make_host_callable(lambda a, b: a + b, [INT64, INT64], [INT64])
            baseline = sys.getrefcount(cb)
            results = {call_op(cb, 1, 2) for _ in range(n)}
            return {
                "baseline": baseline,
                "after": sys.getrefcount(cb),
                "results": sorted(results),
            }
        finally:
            call_op.free()
    finally:
        rt.release_runtime_plugin()


def foreign_handle_round_trip(guest_path: str, tabular_path: str, n: int) -> dict:
    """A tabular object crosses into JS and back n times.

    JS sees an opaque token, returns it unchanged, and the host must get
    the original object's handle back; the object's interpreter reference
    count must return to baseline once the calls finish.
    """
    rt_tab = MetaFFIRuntime("tabular")
    rt_tab.load_runtime_plugin()
    rt_node = MetaFFIRuntime("node")
    rt_node.load_runtime_plugin()
    try:
        tab = rt_tab.load_module(tabular_path)
        new_counter = tab.load(
            "class=Counter,callable=<init>", [INT64], [MetaFFITypeInfo(HANDLE)]
        )
        guest = rt_node.load_module(guest_path)
        identity = guest.load(
            "callable=identity", [MetaFFITypeInfo(HANDLE)], [MetaFFITypeInfo(HANDLE)]
        )
        try:
            counter = new_counter(7)
            baseline = sys.getrefcount(counter)
            same = 0
            for _ in range(n):
                back = identity(counter)
                if back.handle == counter.handle and back.runtime_id == counter.runtime_id:
                    same += 1
                # the round trip preserves object identity, so this binding
                # alone would hold a reference at measurement time
                del back
            after = sys.getrefcount(counter)
            release_handle(counter)
            return {"baseline": baseline, "after": after, "same": same}
        finally:
            identity.free()
            new_counter.free()
    finally:
        rt_node.release_runtime_plugin()
        rt_tab.release_runtime_plugin()


def stale_token_is_rejected(guest_path: str) -> str:
    """Callable tokens die with the call that minted them: stashing the JS
    wrapper and invoking it later must fail, not resurrect the callable."""
    rt = MetaFFIRuntime("node")
    rt.load_runtime_plugin()
    try:
        mod = rt.load_module(guest_path)
        keep = mod.load("callable=keep_callback", [CALLABLE], [])
        poke = mod.load("callable=poke_kept_callback", [INT64, INT64], [INT64])
        try:
            cb = make_host_callable(lambda a, b: a + b, [INT64, INT64], [INT64])
            keep(cb)
            try:
                poke(1, 2)
                return "no error"
            except Exception as exc:  # noqa: BLE001 - text is the contract
                return str(exc)
        finally:
            poke.free()
            keep.free()
    finally:
        rt.release_runtime_plugin()
