"""XCall: the uniform two-slot invocation record, plus the per-thread CDTS
buffer cache that keeps small calls off the heap.

Entrypoint shapes (the only two ABI shapes):
  with data:    entrypoint(context, pcdts, out_err)  where pcdts[0] holds the
                arguments CDTS and pcdts[1] the return-values CDTS
  without data: entrypoint(context, out_err)

The cache pre-allocates 50 CDTs and 50 CDTS per thread. Every call consumes
two CDTS (args + rets) and params+rets CDT cells; a call needing more than
50 cells, or arriving when the pools are exhausted, takes the heap path.
Cache pairs are freed in LIFO order — xcalls nest like stack frames
(callbacks re-enter), so the most recent pair is always released first.
"""

from __future__ import annotations

import threading
from dataclasses import dataclass
from typing import Any, Callable, Sequence

from .allocator import Allocator, Buffer, ErrorSlot, default_allocator
from .cdt import (
    CDT,
    CDTS,
    CDT_BYTE_SIZE,
    CDTS_BYTE_SIZE,
    CallableValue,
    decode,
    deep_free_cdt,
    encode_into,
    reset_cdt,
)
from .types import ARRAY, MetaFFITypeInfo, MetaFFITypes, is_array_type

CDT_CACHE_SIZE = 50
CDTS_CACHE_SIZE = 50


class XCallError(RuntimeError):
    """Error text propagated from a guest entrypoint."""


class CacheDisciplineError(RuntimeError):
    """A cache pair was freed out of LIFO order (programming error)."""


@dataclass(frozen=True, eq=False)
class XCall:
    """Entrypoint address + opaque context token. slot semantics:
    [0] the entrypoint, [1] the context (may be None)."""

    entrypoint: Callable[..., None]
    context: Any = None

    def __post_init__(self) -> None:
        if self.entrypoint is None:
            raise ValueError("XCall entrypoint must be non-null")

    def __getitem__(self, index: int) -> Any:
        if index == 0:
            return self.entrypoint
        if index == 1:
            return self.context
        raise IndexError("XCall has exactly two slots")


@dataclass(eq=False)
class CdtsPair:
    """The two-element CDTS block passed to a data-carrying entrypoint."""

    cells: tuple[CDTS, CDTS]
    from_cache: bool
    cached_cdt_span: int = 0
    heap_buffer: Buffer | None = None

    def __getitem__(self, index: int) -> CDTS:
        return self.cells[index]


class _ThreadCache(threading.local):
    def __init__(self) -> None:
        self.cdt_cells = [CDT() for _ in range(CDT_CACHE_SIZE)]
        self.cdts_cells = [CDTS(arr=[], allocated_on_heap=False) for _ in range(CDTS_CACHE_SIZE)]
        self.cdt_index = 0
        self.cdts_index = 0
        self.live: list[CdtsPair] = []


_cache = _ThreadCache()


def cache_indices() -> tuple[int, int]:
    """Current thread's (cdt_index, cdts_index); test/diagnostic hook."""
    return _cache.cdt_index, _cache.cdts_index


def alloc_cdts_buffer(
    params_count: int,
    ret_count: int,
    allocator: Allocator | None = None,
) -> CdtsPair:
    """Take an args/rets CDTS pair, from the thread cache when it fits."""
    if params_count < 0 or ret_count < 0:
        raise ValueError("counts must be non-negative")
    span = params_count + ret_count
    c = _cache
    if (
        span <= CDT_CACHE_SIZE
        and c.cdts_index + 2 <= CDTS_CACHE_SIZE
        and c.cdt_index + span <= CDT_CACHE_SIZE
    ):
        params_cdts = c.cdts_cells[c.cdts_index]
        rets_cdts = c.cdts_cells[c.cdts_index + 1]
        params_cdts.arr = c.cdt_cells[c.cdt_index : c.cdt_index + params_count]
        rets_cdts.arr = c.cdt_cells[c.cdt_index + params_count : c.cdt_index + span]
        c.cdt_index += span
        c.cdts_index += 2
        pair = CdtsPair(cells=(params_cdts, rets_cdts), from_cache=True, cached_cdt_span=span)
        c.live.append(pair)
        return pair

    allocator = allocator or default_allocator
    buf = allocator.alloc(2 * CDTS_BYTE_SIZE + span * CDT_BYTE_SIZE)
    if buf is None:
        raise MemoryError("allocator exhausted while allocating a CDTS pair")
    params_cdts = CDTS(arr=[CDT() for _ in range(params_count)], allocated_on_heap=True)
    rets_cdts = CDTS(arr=[CDT() for _ in range(ret_count)], allocated_on_heap=True)
    return CdtsPair(cells=(params_cdts, rets_cdts), from_cache=False, heap_buffer=buf)


def free_cdts_buffer(pair: CdtsPair, allocator: Allocator | None = None) -> None:
    """Release a pair: deep-free owned payloads, then return cache indices
    (LIFO) or the heap block."""
    allocator = allocator or default_allocator
    if pair.from_cache:
        c = _cache
        if not c.live or c.live[-1] is not pair:
            # checked before any mutation so the bad free has no effect
            raise CacheDisciplineError("cache pair freed out of LIFO order")
    for cdts in pair.cells:
        for cell in cdts.arr:
            deep_free_cdt(cell, allocator)
    if pair.from_cache:
        c = _cache
        for cdts in pair.cells:
            for cell in cdts.arr:
                reset_cdt(cell)
            cdts.arr = []
        c.live.pop()
        c.cdt_index -= pair.cached_cdt_span
        c.cdts_index -= 2
    else:
        allocator.free(pair.heap_buffer)
        pair.heap_buffer = None


def invoke_xcall(
    xcall: XCall,
    pair: CdtsPair | None = None,
    allocator: Allocator | None = None,
) -> None:
    """Call through an XCall. pair is required iff the entity carries data.

    The error slot starts null; a guest-set error string (allocator-owned)
    is read, freed, and raised as XCallError.
    """
    allocator = allocator or default_allocator
    err = ErrorSlot(allocator)
    if pair is None:
        xcall.entrypoint(xcall.context, err)
    else:
        xcall.entrypoint(xcall.context, pair, err)
    message = err.take()
    if message is not None:
        raise XCallError(message)


def _info_for_tag(tag: MetaFFITypes) -> MetaFFITypeInfo:
    if is_array_type(tag) and int(tag) != int(ARRAY):
        return MetaFFITypeInfo(tag, dimensions=-1)
    return MetaFFITypeInfo(tag)


def call_callable(value: CallableValue, args: Sequence[Any], allocator: Allocator | None = None) -> Any:
    """Invoke a CallableValue with host values; returns the decoded result
    (None / single value / tuple). Used by guests to call received
    callbacks and by hosts to drive make_callable results."""
    allocator = allocator or default_allocator
    params = [_info_for_tag(t) for t in value.parameter_types]
    rets = [_info_for_tag(t) for t in value.retval_types]
    if len(args) != len(params):
        raise XCallError(f"callable expects {len(params)} argument(s), got {len(args)}")
    if not params and not rets:
        invoke_xcall(value.xcall, None, allocator)
        return None
    pair = alloc_cdts_buffer(len(params), len(rets), allocator)
    try:
        for cell, arg, info in zip(pair[0].arr, args, params):
            encode_into(cell, arg, info, allocator)
        invoke_xcall(value.xcall, pair, allocator)
        results = tuple(decode(cell, allocator) for cell in pair[1].arr)
    finally:
        free_cdts_buffer(pair, allocator)
    if not results:
        return None
    if len(results) == 1:
        return results[0]
    return results
