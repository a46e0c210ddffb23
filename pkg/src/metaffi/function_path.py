"""Parser/formatter for the entity-locating mini-language.

A path is a comma-separated list of key=value pairs and bare tags, e.g.
"class=org.apache.logging.log4j.Logger,callable=error,instance_required".
The first '=' in a segment splits key from value, so values may contain
'='. There is no whitespace trimming and no escaping for commas (documented
limitation). Duplicate keys and duplicate tags are rejected: lookups must
be unambiguous. Each runtime plugin documents the keys and tags it
recognizes.
"""

from __future__ import annotations

from dataclasses import dataclass


class FunctionPathError(ValueError):
    """Parse or merge failure; the message names the offending segment."""


@dataclass(frozen=True)
class FunctionPath:
    """Ordered entries: (key, value) pairs and (tag, None) tags."""

    entries: tuple[tuple[str, str | None], ...] = ()

    def lookup(self, key: str) -> str | None:
        for name, value in self.entries:
            if name == key and value is not None:
                return value
        return None

    def has_tag(self, tag: str) -> bool:
        return any(name == tag and value is None for name, value in self.entries)

    def to_string(self) -> str:
        return ",".join(
            name if value is None else f"{name}={value}"
            for name, value in self.entries
        )

    def __str__(self) -> str:
        return self.to_string()


def parse_function_path(text: str) -> FunctionPath:
    """Parse path text; empty input yields an empty path."""
    if text == "":
        return FunctionPath()
    entries: list[tuple[str, str | None]] = []
    seen_keys: set[str] = set()
    seen_tags: set[str] = set()
    for index, segment in enumerate(text.split(",")):
        if segment == "":
            raise FunctionPathError(f"segment {index}: empty segment")
        if "=" in segment:
            key, value = segment.split("=", 1)
            if key == "":
                raise FunctionPathError(f"segment {index}: empty key")
            if key in seen_keys:
                raise FunctionPathError(f"segment {index}: duplicate key {key!r}")
            seen_keys.add(key)
            entries.append((key, value))
        else:
            if segment in seen_tags:
                raise FunctionPathError(f"segment {index}: duplicate tag {segment!r}")
            seen_tags.add(segment)
            entries.append((segment, None))
    return FunctionPath(tuple(entries))


def fp_lookup(fp: FunctionPath, key: str) -> str | None:
    return fp.lookup(key)


def fp_has_tag(fp: FunctionPath, tag: str) -> bool:
    return fp.has_tag(tag)


def fp_to_string(fp: FunctionPath) -> str:
    return fp.to_string()


def merge_paths(base: str, extra: str) -> str:
    """Parse both texts, concatenate, re-serialize.

    Duplicate keys/tags across the two sides are rejected. When base is
    already a prefix of extra the merge returns extra unchanged, so merging
    the same base twice (construction finalization) is idempotent.
    """
    base_fp = parse_function_path(base)
    extra_fp = parse_function_path(extra)
    if not base_fp.entries:
        return extra_fp.to_string()
    if not extra_fp.entries:
        return base_fp.to_string()
    if extra_fp.entries[: len(base_fp.entries)] == base_fp.entries:
        return extra_fp.to_string()
    return parse_function_path(
        f"{base_fp.to_string()},{extra_fp.to_string()}"
    ).to_string()
