from .json_io import IdlError, idl_from_json, idl_to_json
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
    finalize_construction,
    relink_parents,
)

__all__ = [
    "ArgDefinition",
    "ClassDefinition",
    "ConstructorDefinition",
    "FieldDefinition",
    "FunctionDefinition",
    "GlobalDefinition",
    "IDLDefinition",
    "IdlError",
    "MethodDefinition",
    "ModuleDefinition",
    "finalize_construction",
    "idl_from_json",
    "idl_to_json",
    "relink_parents",
]
