"""JSON (de)serialization for the IDL tree.

Loading is two layers: structural validation against the shipped schema,
then semantic checks the schema language cannot express (numeric/textual
type agreement, dimension duplication equality, accessor arity rules,
uniqueness, constructor return shape). Every diagnostic cites the JSON
path of the offending node, e.g. "Modules[0].Functions[0].Name".

Serialization emits keys in a fixed order so identical trees produce
byte-identical documents.
"""

from __future__ import annotations

import json
from importlib import resources

import jsonschema

from ..types import (
    MetaFFITypes,
    MetaFFITypeInfo,
    UnknownTypeName,
    base_type,
    constant_to_type_name,
    type_name_to_constant,
)
from .model import (
    ArgDefinition,
    ClassDefinition,
    ConstructorDefinition,
    FieldDefinition,
    FunctionDefinition,
    GlobalDefinition,
    IDLDefinition,
    MethodDefinition,
    ModuleDefinition,
    relink_parents,
)


class IdlError(ValueError):
    """Malformed IDL document; the message cites the JSON path."""


_schema = json.loads(
    resources.files(__package__).joinpath("schema.json").read_text(encoding="utf-8")
)
_validator = jsonschema.Draft7Validator(_schema)


def _format_path(parts) -> str:
    text = ""
    for part in parts:
        if isinstance(part, int):
            text += f"[{part}]"
        else:
            text += f".{part}" if text else str(part)
    return text


def _validate_structure(doc) -> None:
    error = jsonschema.exceptions.best_match(_validator.iter_errors(doc))
    if error is None:
        return
    path = _format_path(error.absolute_path)
    if error.validator == "required" and isinstance(error.instance, dict):
        missing = next((p for p in error.validator_value if p not in error.instance), None)
        if missing is not None:
            path = f"{path}.{missing}" if path else missing
    raise IdlError(f"schema violation at {path or '<document root>'}: {error.message}")


# -- loading -----------------------------------------------------------------

def _type_info_from(obj, path: str) -> MetaFFITypeInfo:
    name, numeric, alias, dims = obj["StringType"], obj["Type"], obj["Alias"], obj["Dimensions"]
    try:
        tag = type_name_to_constant(name)
    except UnknownTypeName:
        raise IdlError(f"{path}.StringType: unknown type name {name!r}") from None
    if int(tag) != numeric:
        raise IdlError(
            f"{path}: StringType {name!r} ({int(tag)}) disagrees with Type {numeric}"
        )
    if alias == "":
        raise IdlError(f"{path}.Alias: empty alias (use null)")
    is_array = bool(tag & MetaFFITypes.metaffi_array_type)
    if dims > 0 and not is_array:
        raise IdlError(f"{path}: Dimensions {dims} on non-array type {name!r}")
    if dims == 0 and is_array:
        raise IdlError(f"{path}: array type {name!r} requires Dimensions > 0")
    return MetaFFITypeInfo(tag, alias=alias, dimensions=dims)


def _arg_from(obj, path: str, cls=ArgDefinition, **extra) -> ArgDefinition:
    info = _type_info_from(obj["Type"], f"{path}.Type")
    if obj["Dimensions"] != info.dimensions:
        raise IdlError(
            f"{path}: Dimensions {obj['Dimensions']} != Type.Dimensions {info.dimensions}"
        )
    return cls(
        Name=obj["Name"],
        Type=info,
        Comment=obj["Comment"],
        Tags=dict(obj["Tags"]),
        Dimensions=obj["Dimensions"],
        IsOptional=obj["IsOptional"],
        **extra,
    )


def _function_from(obj, path: str, cls=FunctionDefinition, **extra) -> FunctionDefinition:
    return cls(
        Name=obj["Name"],
        Comment=obj["Comment"],
        Tags=dict(obj["Tags"]),
        FunctionPath=obj["FunctionPath"],
        Parameters=[
            _arg_from(o, f"{path}.Parameters[{i}]")
            for i, o in enumerate(obj["Parameters"])
        ],
        ReturnValues=[
            _arg_from(o, f"{path}.ReturnValues[{i}]")
            for i, o in enumerate(obj["ReturnValues"])
        ],
        OverloadIndex=obj["OverloadIndex"],
        **extra,
    )


def _method_from(obj, path: str) -> MethodDefinition:
    method = _function_from(
        obj, path, cls=MethodDefinition, InstanceRequired=obj["InstanceRequired"]
    )
    if method.InstanceRequired:
        first = method.Parameters[0] if method.Parameters else None
        if first is None or base_type(first.Type.type) != MetaFFITypes.metaffi_handle_type:
            raise IdlError(
                f"{path}: InstanceRequired requires a leading handle parameter"
            )
    return method


def _matches(arg: ArgDefinition, declared: ArgDefinition) -> bool:
    return (
        arg.Type.type == declared.Type.type and arg.Dimensions == declared.Dimensions
    )


def _check_global_accessors(g: GlobalDefinition, path: str) -> None:
    if g.Getter is None and g.Setter is None:
        raise IdlError(f"{path}: a global needs a Getter or a Setter")
    if g.Getter is not None:
        ok = (
            not g.Getter.Parameters
            and len(g.Getter.ReturnValues) == 1
            and _matches(g.Getter.ReturnValues[0], g)
        )
        if not ok:
            raise IdlError(
                f"{path}.Getter: must take 0 parameters and return 1 value of the global's type"
            )
    if g.Setter is not None:
        ok = (
            len(g.Setter.Parameters) == 1
            and _matches(g.Setter.Parameters[0], g)
            and not g.Setter.ReturnValues
        )
        if not ok:
            raise IdlError(
                f"{path}.Setter: must take 1 parameter of the global's type and return nothing"
            )


def _global_from(obj, path: str) -> GlobalDefinition:
    getter = (
        _function_from(obj["Getter"], f"{path}.Getter") if obj["Getter"] is not None else None
    )
    setter = (
        _function_from(obj["Setter"], f"{path}.Setter") if obj["Setter"] is not None else None
    )
    g = _arg_from(obj, path, cls=GlobalDefinition, Getter=getter, Setter=setter)
    _check_global_accessors(g, path)
    return g


def _check_field_accessors(f: FieldDefinition, path: str) -> None:
    if f.Getter is None and f.Setter is None:
        raise IdlError(f"{path}: a field needs a Getter or a Setter")
    if f.Getter is not None:
        offset = 1 if f.Getter.InstanceRequired else 0
        ok = (
            len(f.Getter.Parameters) == offset
            and len(f.Getter.ReturnValues) == 1
            and _matches(f.Getter.ReturnValues[0], f)
        )
        if not ok:
            raise IdlError(
                f"{path}.Getter: getter arity/type does not match the field"
            )
    if f.Setter is not None:
        offset = 1 if f.Setter.InstanceRequired else 0
        ok = (
            len(f.Setter.Parameters) == offset + 1
            and _matches(f.Setter.Parameters[offset], f)
            and not f.Setter.ReturnValues
        )
        if not ok:
            raise IdlError(
                f"{path}.Setter: setter arity/type does not match the field"
            )


def _field_from(obj, path: str) -> FieldDefinition:
    getter = _method_from(obj["Getter"], f"{path}.Getter") if obj["Getter"] is not None else None
    setter = _method_from(obj["Setter"], f"{path}.Setter") if obj["Setter"] is not None else None
    f = _arg_from(obj, path, cls=FieldDefinition, Getter=getter, Setter=setter)
    _check_field_accessors(f, path)
    return f


def _constructor_from(obj, path: str) -> ConstructorDefinition:
    ctor = _function_from(obj, path, cls=ConstructorDefinition)
    returns_handle = any(
        base_type(r.Type.type) == MetaFFITypes.metaffi_handle_type
        for r in ctor.ReturnValues
    )
    if not returns_handle:
        raise IdlError(f"{path}: a constructor must return an instance handle")
    return ctor


def _check_unique(pairs, what: str, path: str) -> None:
    seen = {}
    for i, key in enumerate(pairs):
        if key in seen:
            raise IdlError(
                f"{path}[{i}]: duplicate {what} {key!r} (first at index {seen[key]})"
            )
        seen[key] = i


def _class_from(obj, path: str) -> ClassDefinition:
    ctors = [
        _constructor_from(o, f"{path}.Constructors[{i}]")
        for i, o in enumerate(obj["Constructors"])
    ]
    methods = [
        _method_from(o, f"{path}.Methods[{i}]") for i, o in enumerate(obj["Methods"])
    ]
    fields = [
        _field_from(o, f"{path}.Fields[{i}]") for i, o in enumerate(obj["Fields"])
    ]
    _check_unique([c.OverloadIndex for c in ctors], "constructor overload", f"{path}.Constructors")
    _check_unique(
        [(m.Name, m.OverloadIndex) for m in methods], "method", f"{path}.Methods"
    )
    _check_unique([f.Name for f in fields], "field", f"{path}.Fields")
    return ClassDefinition(
        Name=obj["Name"],
        Comment=obj["Comment"],
        Tags=dict(obj["Tags"]),
        FunctionPath=obj["FunctionPath"],
        Constructors=ctors,
        Methods=methods,
        Fields=fields,
    )


def _module_from(obj, path: str) -> ModuleDefinition:
    functions = [
        _function_from(o, f"{path}.Functions[{i}]")
        for i, o in enumerate(obj["Functions"])
    ]
    classes = [
        _class_from(o, f"{path}.Classes[{i}]") for i, o in enumerate(obj["Classes"])
    ]
    globals_ = [
        _global_from(o, f"{path}.Globals[{i}]") for i, o in enumerate(obj["Globals"])
    ]
    _check_unique(
        [(f.Name, f.OverloadIndex) for f in functions], "function", f"{path}.Functions"
    )
    _check_unique([c.Name for c in classes], "class", f"{path}.Classes")
    _check_unique([g.Name for g in globals_], "global", f"{path}.Globals")
    return ModuleDefinition(
        Name=obj["Name"],
        Comment=obj["Comment"],
        Tags=dict(obj["Tags"]),
        IDLFullPath=obj["IDLFullPath"],
        Functions=functions,
        Classes=classes,
        Globals=globals_,
        ExternalResources=list(obj["ExternalResources"]),
    )


def idl_from_json(text: str) -> IDLDefinition:
    """Parse and validate an IDL JSON document into a linked tree."""
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise IdlError(f"invalid JSON: {exc}") from None
    _validate_structure(doc)
    definition = IDLDefinition(
        IDLSource=doc["IDLSource"],
        IDLExtension=doc["IDLExtension"],
        IDLFileNameWithExtension=doc["IDLFileNameWithExtension"],
        IDLFullPath=doc["IDLFullPath"],
        MetaFFIGuestLib=doc["MetaFFIGuestLib"],
        Modules=[_module_from(o, f"Modules[{i}]") for i, o in enumerate(doc["Modules"])],
    )
    return relink_parents(definition)


# -- serialization -----------------------------------------------------------

def _type_info_to(info: MetaFFITypeInfo | None, owner: str) -> dict:
    if info is None:
        raise IdlError(f"{owner} has no Type set")
    return {
        "StringType": constant_to_type_name(info.type),
        "Type": int(info.type),
        "Alias": info.alias,
        "Dimensions": info.dimensions,
    }


def _arg_to(arg: ArgDefinition) -> dict:
    return {
        "Name": arg.Name,
        "Type": _type_info_to(arg.Type, f"argument {arg.Name!r}"),
        "Comment": arg.Comment,
        "Tags": dict(arg.Tags),
        "Dimensions": arg.Dimensions,
        "IsOptional": arg.IsOptional,
    }


def _function_to(fn: FunctionDefinition) -> dict:
    return {
        "Name": fn.Name,
        "Comment": fn.Comment,
        "Tags": dict(fn.Tags),
        "FunctionPath": fn.FunctionPath,
        "Parameters": [_arg_to(a) for a in fn.Parameters],
        "ReturnValues": [_arg_to(a) for a in fn.ReturnValues],
        "OverloadIndex": fn.OverloadIndex,
    }


def _method_to(method: MethodDefinition) -> dict:
    doc = _function_to(method)
    doc["InstanceRequired"] = method.InstanceRequired
    return doc


def _global_to(g: GlobalDefinition) -> dict:
    doc = _arg_to(g)
    doc["Getter"] = _function_to(g.Getter) if g.Getter is not None else None
    doc["Setter"] = _function_to(g.Setter) if g.Setter is not None else None
    return doc


def _field_to(f: FieldDefinition) -> dict:
    doc = _arg_to(f)
    doc["Getter"] = _method_to(f.Getter) if f.Getter is not None else None
    doc["Setter"] = _method_to(f.Setter) if f.Setter is not None else None
    return doc


def _class_to(cls: ClassDefinition) -> dict:
    return {
        "Name": cls.Name,
        "Comment": cls.Comment,
        "Tags": dict(cls.Tags),
        "FunctionPath": cls.FunctionPath,
        "Constructors": [_function_to(c) for c in cls.Constructors],
        "Methods": [_method_to(m) for m in cls.Methods],
        "Fields": [_field_to(f) for f in cls.Fields],
    }


def _module_to(module: ModuleDefinition) -> dict:
    return {
        "Name": module.Name,
        "Comment": module.Comment,
        "Tags": dict(module.Tags),
        "IDLFullPath": module.IDLFullPath,
        "Functions": [_function_to(f) for f in module.Functions],
        "Classes": [_class_to(c) for c in module.Classes],
        "Globals": [_global_to(g) for g in module.Globals],
        "ExternalResources": list(module.ExternalResources),
    }


def idl_to_json(definition: IDLDefinition) -> str:
    """Serialize with fixed key order; the output is schema-valid and
    idl_from_json of it reproduces the tree."""
    doc = {
        "IDLSource": definition.IDLSource,
        "IDLExtension": definition.IDLExtension,
        "IDLFileNameWithExtension": definition.IDLFileNameWithExtension,
        "IDLFullPath": definition.IDLFullPath,
        "MetaFFIGuestLib": definition.MetaFFIGuestLib,
        "Modules": [_module_to(m) for m in definition.Modules],
    }
    return json.dumps(doc, indent=2, ensure_ascii=False) + "\n"
