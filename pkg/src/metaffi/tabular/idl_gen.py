"""Manifest to IDL tree translation.

Emits FunctionPaths in the grammar the tabular runtime resolves, so a
host wrapper generated from this IDL loads entities verbatim:

    callable=add,overload_index=1
    class=org.x.Counter,callable=<init>
    class=org.x.Counter,callable=inc,instance_required
    class=org.x.Counter,field=value,getter,instance_required
    global=seed,setter

Dynamic [?] dimensions flatten to Dimensions=1 (the serialized form has
no wildcard); the runtime treats manifest-side dynamic dimensions as
compatible with any declared depth, so loads still match.
"""

from __future__ import annotations

from pathlib import Path

from ..idl import (
    ArgDefinition,
    ClassDefinition,
    ConstructorDefinition,
    FieldDefinition,
    FunctionDefinition,
    GlobalDefinition,
    IDLDefinition,
    MethodDefinition,
    ModuleDefinition,
    finalize_construction,
)
from ..types import HANDLE, MetaFFITypeInfo, base_type
from .manifest import (
    ClassDecl,
    FieldDecl,
    GlobalDecl,
    ManifestError,
    ManifestType,
    Param,
    parse_manifest,
)


def _type_info(mt: ManifestType) -> MetaFFITypeInfo:
    dims = 1 if mt.dimensions == -1 else mt.dimensions
    return MetaFFITypeInfo(mt.tag, alias=mt.alias, dimensions=dims)


def _arg(p: Param) -> ArgDefinition:
    info = _type_info(p.type)
    return ArgDefinition(Name=p.name, Type=info, Dimensions=info.dimensions)


def _instance_arg(cls: ClassDecl) -> ArgDefinition:
    info = MetaFFITypeInfo(HANDLE, alias=cls.simple_name)
    return ArgDefinition(Name="instance", Type=info)


def _overload_path(base: str, overload_index: int) -> str:
    return f"{base},overload_index={overload_index}" if overload_index else base


def _global_to_idl(decl: GlobalDecl) -> GlobalDefinition:
    info = _type_info(decl.type)
    mirror = ArgDefinition(Name=decl.name, Type=info, Dimensions=info.dimensions)
    getter = FunctionDefinition(
        Name=f"get_{decl.name}",
        FunctionPath=f"global={decl.name},getter",
        ReturnValues=[mirror],
    )
    setter = None
    if not decl.readonly:
        setter = FunctionDefinition(
            Name=f"set_{decl.name}",
            FunctionPath=f"global={decl.name},setter",
            Parameters=[mirror],
        )
    return GlobalDefinition(
        Name=decl.name,
        Type=info,
        Dimensions=info.dimensions,
        Getter=getter,
        Setter=setter,
    )


def _field_to_idl(cls: ClassDecl, decl: FieldDecl) -> FieldDefinition:
    info = _type_info(decl.type)
    mirror = ArgDefinition(Name=decl.name, Type=info, Dimensions=info.dimensions)
    getter = MethodDefinition(
        Name=f"get_{decl.name}",
        FunctionPath=f"field={decl.name},getter",
        Parameters=[_instance_arg(cls)],
        ReturnValues=[mirror],
    )
    setter = None
    if not decl.readonly:
        setter = MethodDefinition(
            Name=f"set_{decl.name}",
            FunctionPath=f"field={decl.name},setter",
            Parameters=[_instance_arg(cls), mirror],
        )
    return FieldDefinition(
        Name=decl.name,
        Type=info,
        Dimensions=info.dimensions,
        Getter=getter,
        Setter=setter,
    )


def _class_to_idl(cls: ClassDecl) -> ClassDefinition:
    for c in cls.constructors:
        if not any(base_type(r.type.tag) == HANDLE for r in c.rets):
            raise ManifestError(
                f"constructor of class {cls.name!r} must return a handle"
            )
    ctors = [
        ConstructorDefinition(
            Name=cls.simple_name,
            FunctionPath=_overload_path("callable=<init>", c.overload_index),
            Parameters=[_arg(p) for p in c.params],
            ReturnValues=[_arg(r) for r in c.rets],
            OverloadIndex=c.overload_index,
        )
        for c in cls.constructors
    ]
    methods = []
    for m in cls.methods:
        params = [] if m.static else [_instance_arg(cls)]
        params.extend(_arg(p) for p in m.params)
        methods.append(
            MethodDefinition(
                Name=m.name,
                FunctionPath=_overload_path(f"callable={m.name}", m.overload_index),
                Parameters=params,
                ReturnValues=[_arg(r) for r in m.rets],
                OverloadIndex=m.overload_index,
                InstanceRequired=not m.static,
            )
        )
    return ClassDefinition(
        Name=cls.simple_name,
        FunctionPath=f"class={cls.name}",
        Constructors=ctors,
        Methods=methods,
        Fields=[_field_to_idl(cls, f) for f in cls.fields],
    )


def manifest_to_idl(text: str, source_path: str | None = None) -> IDLDefinition:
    """Translate manifest text into a finalized IDL tree.

    source_path, when known, fills the file-identity fields; the guest
    lib is always the bare manifest filename so generated wrappers can
    resolve it relative to themselves.
    """
    manifest = parse_manifest(text)
    if source_path is not None:
        path = Path(source_path)
        full_path = str(path.resolve())
        filename = path.name
    else:
        full_path = ""
        filename = f"{manifest.name}.tabular"

    functions = [
        FunctionDefinition(
            Name=c.name,
            FunctionPath=_overload_path(f"callable={c.name}", c.overload_index),
            Parameters=[_arg(p) for p in c.params],
            ReturnValues=[_arg(r) for r in c.rets],
            OverloadIndex=c.overload_index,
        )
        for c in manifest.callables
    ]
    module = ModuleDefinition(
        Name=manifest.name,
        Tags={"runtime_plugin": "tabular"},
        IDLFullPath=full_path,
        Functions=functions,
        Classes=[_class_to_idl(c) for c in manifest.classes],
        Globals=[_global_to_idl(g) for g in manifest.globals],
    )
    idl = IDLDefinition(
        IDLSource=Path(filename).stem,
        IDLExtension=Path(filename).suffix,
        IDLFileNameWithExtension=filename,
        IDLFullPath=full_path,
        MetaFFIGuestLib=filename,
        Modules=[module],
    )
    return finalize_construction(idl)
