"""Parser for tabular module manifests (grammar v1).

A manifest declares the entities one module exposes and their signatures.
It is both the runtime plugin's module format and the IDL plugin's input.

    # comments and blank lines are ignored
    module counter
    callable add(x: int64, y: int64) -> (sum: int64)
    global seed: int64 = 42
    global motto: string8 = "carpe diem" readonly
    class Counter:
      constructor() -> (instance: handle(Counter))
      method inc() -> ()
      static method make(start: int64) -> (instance: handle(Counter))
      field value: int64

Types: the 24 type names, plus `[]` per fixed array dimension, `[?]` for
dynamic/mixed depth, and `handle(Alias)` to carry a guest class name.
Method/field lines never list the instance parameter; instance entities
receive it implicitly. Repeating a callable/constructor/method name
declares an overload (indexed in declaration order). Globals and fields
marked `readonly` have no setter.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field

from ..types import ARRAY, MetaFFITypes, type_name_to_constant

_NAME = r"[A-Za-z_][\w.$<>-]*"
_RE_MODULE = re.compile(rf"^module\s+({_NAME})$")
_RE_CLASS = re.compile(rf"^class\s+({_NAME})\s*:$")
_RE_CALLABLE = re.compile(rf"^callable\s+({_NAME})\s*\((.*)\)\s*->\s*\((.*)\)$")
_RE_GLOBAL = re.compile(
    rf"^global\s+({_NAME})\s*:\s*([^=]+?)(?:\s*=\s*(.+?))?(\s+readonly)?$"
)
_RE_CONSTRUCTOR = re.compile(r"^constructor\s*\((.*)\)\s*->\s*\((.*)\)$")
_RE_METHOD = re.compile(rf"^(static\s+)?method\s+({_NAME})\s*\((.*)\)\s*->\s*\((.*)\)$")
_RE_FIELD = re.compile(rf"^field\s+({_NAME})\s*:\s*(.+?)(\s+readonly)?$")
_RE_TYPE = re.compile(r"^([a-z][a-z0-9]*)\s*(\(\s*([\w.$]+)\s*\))?\s*((?:\[\]|\[\?\])*)$")


class ManifestError(ValueError):
    """Malformed manifest; message carries the 1-based line number."""


@dataclass(frozen=True)
class ManifestType:
    text: str
    tag: MetaFFITypes
    dimensions: int = 0
    alias: str | None = None


@dataclass(frozen=True)
class Param:
    name: str
    type: ManifestType


@dataclass(frozen=True)
class CallableDecl:
    name: str
    params: tuple[Param, ...]
    rets: tuple[Param, ...]
    overload_index: int = 0


@dataclass(frozen=True)
class GlobalDecl:
    name: str
    type: ManifestType
    initial: object = None
    readonly: bool = False


@dataclass(frozen=True)
class ConstructorDecl:
    params: tuple[Param, ...]
    rets: tuple[Param, ...]
    overload_index: int = 0


@dataclass(frozen=True)
class MethodDecl:
    name: str
    params: tuple[Param, ...]
    rets: tuple[Param, ...]
    static: bool = False
    overload_index: int = 0


@dataclass(frozen=True)
class FieldDecl:
    name: str
    type: ManifestType
    readonly: bool = False


@dataclass
class ClassDecl:
    name: str
    constructors: list[ConstructorDecl] = field(default_factory=list)
    methods: list[MethodDecl] = field(default_factory=list)
    fields: list[FieldDecl] = field(default_factory=list)

    @property
    def simple_name(self) -> str:
        return self.name.rsplit(".", 1)[-1]


@dataclass
class ManifestModule:
    name: str
    callables: list[CallableDecl] = field(default_factory=list)
    globals: list[GlobalDecl] = field(default_factory=list)
    classes: list[ClassDecl] = field(default_factory=list)


def parse_type(text: str, line_no: int = 0) -> ManifestType:
    m = _RE_TYPE.match(text.strip())
    if m is None:
        raise ManifestError(f"line {line_no}: malformed type {text.strip()!r}")
    base_name, _, alias, suffixes = m.groups()
    try:
        tag = type_name_to_constant(base_name)
    except Exception:
        raise ManifestError(f"line {line_no}: unknown type {base_name!r}") from None
    if alias is not None and base_name != "handle":
        raise ManifestError(f"line {line_no}: only handle types take an alias")
    dims = 0
    if suffixes:
        parts = re.findall(r"\[\]|\[\?\]", suffixes)
        if "[?]" in parts:
            if len(parts) > 1:
                raise ManifestError(f"line {line_no}: [?] cannot combine with other suffixes")
            dims = -1
        else:
            dims = len(parts)
        tag = tag | ARRAY
    return ManifestType(text=text.strip(), tag=tag, dimensions=dims, alias=alias)


def _parse_params(text: str, line_no: int) -> tuple[Param, ...]:
    text = text.strip()
    if not text:
        return ()
    params = []
    for chunk in text.split(","):
        if ":" not in chunk:
            raise ManifestError(f"line {line_no}: expected 'name: type', got {chunk.strip()!r}")
        name, type_text = chunk.split(":", 1)
        name = name.strip()
        if not name:
            raise ManifestError(f"line {line_no}: parameter missing a name")
        params.append(Param(name=name, type=parse_type(type_text, line_no)))
    return tuple(params)


def _parse_literal(text: str, line_no: int) -> object:
    text = text.strip()
    if text.startswith('"') and text.endswith('"') and len(text) >= 2:
        return text[1:-1]
    if text in ("true", "false"):
        return text == "true"
    try:
        if re.fullmatch(r"-?\d+", text):
            return int(text)
        return float(text)
    except ValueError:
        raise ManifestError(f"line {line_no}: bad literal {text!r}") from None


def parse_manifest(text: str) -> ManifestModule:
    module = ManifestModule(name="")
    current_class: ClassDecl | None = None
    named_module = False
    seen_globals: set[str] = set()

    for line_no, raw in enumerate(text.splitlines(), start=1):
        stripped = raw.strip()
        if not stripped or stripped.startswith("#"):
            continue
        indented = raw[: len(raw) - len(raw.lstrip())] != ""

        if indented:
            if current_class is None:
                raise ManifestError(f"line {line_no}: indented line outside a class block")
            _parse_class_member(stripped, current_class, line_no)
            continue

        current_class = None
        if m := _RE_MODULE.match(stripped):
            if named_module:
                raise ManifestError(f"line {line_no}: duplicate module line")
            module.name = m.group(1)
            named_module = True
        elif m := _RE_CLASS.match(stripped):
            name = m.group(1)
            if any(c.name == name for c in module.classes):
                raise ManifestError(f"line {line_no}: duplicate class {name!r}")
            current_class = ClassDecl(name=name)
            module.classes.append(current_class)
        elif m := _RE_CALLABLE.match(stripped):
            name, params, rets = m.groups()
            overload = sum(1 for c in module.callables if c.name == name)
            module.callables.append(
                CallableDecl(
                    name=name,
                    params=_parse_params(params, line_no),
                    rets=_parse_params(rets, line_no),
                    overload_index=overload,
                )
            )
        elif m := _RE_GLOBAL.match(stripped):
            name, type_text, literal, readonly = m.groups()
            if name in seen_globals:
                raise ManifestError(f"line {line_no}: duplicate global {name!r}")
            seen_globals.add(name)
            decl_type = parse_type(type_text, line_no)
            initial = _parse_literal(literal, line_no) if literal else None
            module.globals.append(
                GlobalDecl(name=name, type=decl_type, initial=initial, readonly=bool(readonly))
            )
        else:
            raise ManifestError(f"line {line_no}: unrecognized declaration {stripped!r}")

    if not named_module:
        raise ManifestError("manifest has no module line")
    return module


def _parse_class_member(stripped: str, cls: ClassDecl, line_no: int) -> None:
    if m := _RE_CONSTRUCTOR.match(stripped):
        params, rets = m.groups()
        cls.constructors.append(
            ConstructorDecl(
                params=_parse_params(params, line_no),
                rets=_parse_params(rets, line_no),
                overload_index=len(cls.constructors),
            )
        )
    elif m := _RE_METHOD.match(stripped):
        static, name, params, rets = m.groups()
        overload = sum(1 for mm in cls.methods if mm.name == name)
        cls.methods.append(
            MethodDecl(
                name=name,
                params=_parse_params(params, line_no),
                rets=_parse_params(rets, line_no),
                static=bool(static),
                overload_index=overload,
            )
        )
    elif m := _RE_FIELD.match(stripped):
        name, type_text, readonly = m.groups()
        if any(f.name == name for f in cls.fields):
            raise ManifestError(f"line {line_no}: duplicate field {name!r}")
        cls.fields.append(
            FieldDecl(name=name, type=parse_type(type_text, line_no), readonly=bool(readonly))
        )
    else:
        raise ManifestError(f"line {line_no}: unrecognized class member {stripped!r}")
