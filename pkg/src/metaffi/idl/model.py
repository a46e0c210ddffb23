"""The IDL entity tree.

Attribute names equal the JSON field names one-to-one (CamelCase), so the
serializer is a plain field walk and documents double as a schema of the
model. parent back-references are live links rebuilt on load; they are
excluded from equality and repr to keep the tree acyclic for comparison.

Type information appears twice on purpose: ArgDefinition.Dimensions next
to Type.Dimensions, and TypeInfo's numeric Type next to its StringType
name. Readers may rely on either; the loader enforces agreement.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from ..function_path import merge_paths
from ..types import MetaFFITypeInfo


@dataclass
class ArgDefinition:
    Name: str = ""
    Type: MetaFFITypeInfo | None = None
    Comment: str = ""
    Tags: dict[str, str] = field(default_factory=dict)
    Dimensions: int = 0
    IsOptional: bool = False


@dataclass
class FunctionDefinition:
    Name: str = ""
    Comment: str = ""
    Tags: dict[str, str] = field(default_factory=dict)
    FunctionPath: str = ""
    Parameters: list[ArgDefinition] = field(default_factory=list)
    ReturnValues: list[ArgDefinition] = field(default_factory=list)
    OverloadIndex: int = 0


@dataclass
class GlobalDefinition(ArgDefinition):
    Getter: FunctionDefinition | None = None
    Setter: FunctionDefinition | None = None


@dataclass
class ConstructorDefinition(FunctionDefinition):
    parent: "ClassDefinition | None" = field(default=None, repr=False, compare=False)


@dataclass
class MethodDefinition(FunctionDefinition):
    InstanceRequired: bool = True
    parent: "ClassDefinition | None" = field(default=None, repr=False, compare=False)


@dataclass
class FieldDefinition(ArgDefinition):
    Getter: MethodDefinition | None = None
    Setter: MethodDefinition | None = None
    parent: "ClassDefinition | None" = field(default=None, repr=False, compare=False)


@dataclass
class ClassDefinition:
    Name: str = ""
    Comment: str = ""
    Tags: dict[str, str] = field(default_factory=dict)
    FunctionPath: str = ""
    Constructors: list[ConstructorDefinition] = field(default_factory=list)
    Methods: list[MethodDefinition] = field(default_factory=list)
    Fields: list[FieldDefinition] = field(default_factory=list)


@dataclass
class ModuleDefinition:
    Name: str = ""
    Comment: str = ""
    Tags: dict[str, str] = field(default_factory=dict)
    IDLFullPath: str = ""
    Functions: list[FunctionDefinition] = field(default_factory=list)
    Classes: list[ClassDefinition] = field(default_factory=list)
    Globals: list[GlobalDefinition] = field(default_factory=list)
    ExternalResources: list[str] = field(default_factory=list)


@dataclass
class IDLDefinition:
    IDLSource: str = ""
    IDLExtension: str = ""
    IDLFileNameWithExtension: str = ""
    IDLFullPath: str = ""
    MetaFFIGuestLib: str = ""
    Modules: list[ModuleDefinition] = field(default_factory=list)


def relink_parents(definition: IDLDefinition) -> IDLDefinition:
    """Point every class member's parent back at its class."""
    for module in definition.Modules:
        for cls in module.Classes:
            for ctor in cls.Constructors:
                ctor.parent = cls
            for method in cls.Methods:
                method.parent = cls
            for fld in cls.Fields:
                fld.parent = cls
                if fld.Getter is not None:
                    fld.Getter.parent = cls
                if fld.Setter is not None:
                    fld.Setter.parent = cls
    return definition


def _finalize_member(class_path: str, member: FunctionDefinition, instance: bool) -> None:
    path = member.FunctionPath
    if instance and "instance_required" not in path.split(","):
        path = merge_paths(path, "instance_required")
    member.FunctionPath = merge_paths(class_path, path)


def finalize_construction(definition: IDLDefinition) -> IDLDefinition:
    """Complete member FunctionPaths from their class path and tag
    instance-requiring members; repeated application changes nothing."""
    for module in definition.Modules:
        for cls in module.Classes:
            for ctor in cls.Constructors:
                _finalize_member(cls.FunctionPath, ctor, instance=False)
            for method in cls.Methods:
                _finalize_member(cls.FunctionPath, method, instance=method.InstanceRequired)
            for fld in cls.Fields:
                for accessor in (fld.Getter, fld.Setter):
                    if accessor is not None:
                        _finalize_member(
                            cls.FunctionPath, accessor, instance=accessor.InstanceRequired
                        )
    return relink_parents(definition)
