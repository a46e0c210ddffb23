"""The shared XLLR allocator.

Every buffer that crosses a component boundary (string payloads, error
texts, heap CDTS blocks, IDL JSON returned by plugins) comes from the one
allocator instance so alloc/free counters can prove leak discipline across
the whole system. Double frees are errors, not corruption.
"""

from __future__ import annotations

import sys
import threading
from typing import Any

_UTF16 = "utf-16-le" if sys.byteorder == "little" else "utf-16-be"
_UTF32 = "utf-32-le" if sys.byteorder == "little" else "utf-32-be"


class AllocatorError(RuntimeError):
    pass


class Buffer:
    """One allocation. Identity-compared; payload is the buffer content."""

    __slots__ = ("size", "payload", "alive", "owner")

    def __init__(self, size: int, payload: Any, owner: "Allocator") -> None:
        self.size = size
        self.payload = payload
        self.alive = True
        self.owner = owner

    def __repr__(self) -> str:  # pragma: no cover - debugging aid
        state = "live" if self.alive else "freed"
        return f"<Buffer {state} size={self.size}>"


class Allocator:
    """Counting allocator; optionally capacity-limited for exhaustion tests."""

    def __init__(self, capacity: int | None = None) -> None:
        self._lock = threading.Lock()
        self.alloc_count = 0
        self.free_count = 0
        self.live_bytes = 0
        self.capacity = capacity

    def alloc(self, size: int, payload: Any = None) -> Buffer | None:
        if size < 0:
            raise AllocatorError(f"negative allocation size: {size}")
        with self._lock:
            if self.capacity is not None and self.live_bytes + size > self.capacity:
                return None  # exhausted; callers must check
            self.alloc_count += 1
            self.live_bytes += size
        return Buffer(size, payload, self)

    def free(self, buffer: Buffer | None) -> None:
        if buffer is None:
            return
        if buffer.owner is not self:
            raise AllocatorError("buffer freed through a foreign allocator")
        if not buffer.alive:
            raise AllocatorError("double free")
        buffer.alive = False
        buffer.payload = None
        with self._lock:
            self.free_count += 1
            self.live_bytes -= buffer.size

    def snapshot(self) -> tuple[int, int]:
        with self._lock:
            return self.alloc_count, self.free_count

    def balanced(self) -> bool:
        alloc, free = self.snapshot()
        return alloc == free

    def _alloc_string(self, text: str, encoding: str, unit: int, length: int | None) -> Buffer:
        if "\x00" in text:
            raise ValueError("strings are null-terminated; embedded NUL rejected")
        data = text.encode(encoding)
        if length is not None:
            data = data[: length * unit]
        buf = self.alloc(len(data) + unit, payload=data + b"\x00" * unit)
        if buf is None:
            raise AllocatorError("allocator exhausted while copying a string")
        return buf

    def alloc_string8(self, text: str, length: int | None = None) -> Buffer:
        """Owned null-terminated UTF-8 copy; length counts code units."""
        return self._alloc_string(text, "utf-8", 1, length)

    def alloc_string16(self, text: str, length: int | None = None) -> Buffer:
        return self._alloc_string(text, _UTF16, 2, length)

    def alloc_string32(self, text: str, length: int | None = None) -> Buffer:
        return self._alloc_string(text, _UTF32, 4, length)

    def free_string(self, buffer: Buffer | None) -> None:
        self.free(buffer)


def read_string8(buffer: Buffer) -> str:
    """Decode a string8 buffer, dropping the terminator."""
    return _read_string(buffer, "utf-8", 1)


def read_string16(buffer: Buffer) -> str:
    return _read_string(buffer, _UTF16, 2)


def read_string32(buffer: Buffer) -> str:
    return _read_string(buffer, _UTF32, 4)


def _read_string(buffer: Buffer, encoding: str, unit: int) -> str:
    if not buffer.alive:
        raise AllocatorError("read from freed buffer")
    data: bytes = buffer.payload
    return data[:-unit].decode(encoding)


class ErrorSlot:
    """Mutable out-error parameter. The caller initializes it empty (null)
    and frees the buffer after reading; callees set it at most once."""

    __slots__ = ("buffer", "_allocator")

    def __init__(self, allocator: "Allocator | None" = None) -> None:
        self.buffer: Buffer | None = None
        self._allocator = allocator or default_allocator

    def set(self, message: str) -> None:
        if self.buffer is not None:
            raise AllocatorError("error slot set twice")
        self.buffer = self._allocator.alloc_string8(message)

    def is_set(self) -> bool:
        return self.buffer is not None

    def take(self) -> str | None:
        """Read and free the error text; returns None when no error is set."""
        if self.buffer is None:
            return None
        message = read_string8(self.buffer)
        self._allocator.free(self.buffer)
        self.buffer = None
        return message


#: The single allocator identity shared by every component.
default_allocator = Allocator()

# Module-level convenience surface mirroring the exported C names.
def xllr_alloc(size: int, payload: Any = None) -> Buffer | None:
    return default_allocator.alloc(size, payload)


def xllr_free(buffer: Buffer | None) -> None:
    default_allocator.free(buffer)


def alloc_string8(text: str, length: int | None = None) -> Buffer:
    return default_allocator.alloc_string8(text, length)


def alloc_string16(text: str, length: int | None = None) -> Buffer:
    return default_allocator.alloc_string16(text, length)


def alloc_string32(text: str, length: int | None = None) -> Buffer:
    return default_allocator.alloc_string32(text, length)


def free_string(buffer: Buffer | None) -> None:
    default_allocator.free_string(buffer)
