"""Python host wrapper generation.

Turns an IDL tree into one importable module: every guest entity becomes
a lazily loaded callable, classes become Python classes holding the
instance handle, fields become properties, globals become get_/set_
functions. Generation is a pure function of the IDL text and options;
identical inputs yield byte-identical output.

Recognized host options (key=value, comma-separated):
    runtime_plugin   override the runtime plugin named by the module tags
"""

from __future__ import annotations

import keyword
import re
from dataclasses import dataclass, field
from pathlib import Path

from jinja2 import Environment, FileSystemLoader, StrictUndefined

from ..function_path import parse_function_path
from ..idl import (
    ArgDefinition,
    ClassDefinition,
    FunctionDefinition,
    IDLDefinition,
    ModuleDefinition,
    idl_from_json,
)
from ..types import HANDLE, MetaFFITypeInfo, base_type


class CompileError(RuntimeError):
    pass


_env = Environment(
    loader=FileSystemLoader(Path(__file__).parent / "templates"),
    undefined=StrictUndefined,
    trim_blocks=True,
    lstrip_blocks=True,
    keep_trailing_newline=True,
)


def parse_options(text: str) -> dict[str, str]:
    """"k1=v1,k2=v2" to a dict; empty text is an empty dict."""
    options: dict[str, str] = {}
    for chunk in filter(None, (text or "").split(",")):
        if "=" not in chunk:
            raise CompileError(f"malformed option {chunk!r} (expected key=value)")
        key, value = chunk.split("=", 1)
        options[key.strip()] = value.strip()
    return options


def _identifier(name: str, fallback: str) -> str:
    cleaned = re.sub(r"\W", "_", name)
    if not cleaned:
        return fallback
    if cleaned[0].isdigit():
        cleaned = f"_{cleaned}"
    if keyword.iskeyword(cleaned):
        cleaned = f"{cleaned}_"
    return cleaned


def _type_expr(info: MetaFFITypeInfo | None, owner: str) -> str:
    if info is None:
        raise CompileError(f"{owner} has no type information")
    args = [repr(info.name)]
    if info.alias is not None:
        args.append(repr(info.alias))
    if info.dimensions:
        args.append(f"dims={info.dimensions}")
    return f"_t({', '.join(args)})"


def _sig_exprs(fn: FunctionDefinition, owner: str) -> tuple[str, str]:
    params = ", ".join(_type_expr(a.Type, f"{owner} parameter {a.Name!r}") for a in fn.Parameters)
    rets = ", ".join(_type_expr(a.Type, f"{owner} return value {a.Name!r}") for a in fn.ReturnValues)
    return f"[{params}]", f"[{rets}]"


def _arg_names(args: list[ArgDefinition]) -> list[str]:
    names: list[str] = []
    for i, a in enumerate(args):
        name = _identifier(a.Name, f"a{i}")
        while name in names:
            name = f"{name}_{i}"
        names.append(name)
    return names


@dataclass
class _Render:
    source: str
    guest_lib_expr: str
    modules: list = field(default_factory=list)
    class_keys: list = field(default_factory=list)  # (lookup key, class name)
    has_entities: bool = False
    has_classes: bool = False
    uses_wrap: bool = False
    uses_wrap_each: bool = False
    uses_first_handle: bool = False


def _ret_aliases(fn: FunctionDefinition) -> list[str | None]:
    out: list[str | None] = []
    for r in fn.ReturnValues:
        is_handle = (
            r.Type is not None
            and base_type(r.Type.type) == HANDLE
            and not r.Type.dimensions
        )
        out.append(r.Type.alias if is_handle and r.Type.alias else None)
    return out


def _return_expr(call: str, fn: FunctionDefinition, render: _Render) -> str:
    aliases = _ret_aliases(fn)
    if not any(aliases):
        return f"return {call}"
    render.uses_wrap = True
    if len(aliases) == 1:
        return f"return _wrap({call}, {aliases[0]!r})"
    render.uses_wrap_each = True
    return f"return _wrap_each({call}, {tuple(aliases)!r})"


def _suffixed(name: str, overload: int) -> str:
    return f"{name}_{overload}" if overload else name


def _add_entity(m: dict, var: str, path: str, params: str, rets: str) -> None:
    m["entities"].append(f"{var} = _Entity({m['loader']}, {path!r}, {params}, {rets})")


def _build_function(m: dict, fn: FunctionDefinition, render: _Render) -> dict:
    var = _identifier(f"_f_{fn.Name}_{fn.OverloadIndex}", "_f")
    params, rets = _sig_exprs(fn, fn.Name)
    _add_entity(m, var, fn.FunctionPath, params, rets)
    args = _arg_names(fn.Parameters)
    return {
        "def_name": _identifier(_suffixed(fn.Name, fn.OverloadIndex), "fn"),
        "args": args,
        "body": _return_expr(f"{var}({', '.join(args)})", fn, render),
    }


def _build_class(m: dict, cls: ClassDefinition, render: _Render) -> dict:
    name = _identifier(cls.Name, "Cls")
    render.has_classes = True
    out: dict = {"name": name, "init": None, "extra_ctors": [], "methods": [], "fields": []}
    for ctor in cls.Constructors:
        var = _identifier(f"_c_{name}_{ctor.OverloadIndex}", "_c")
        params, rets = _sig_exprs(ctor, f"{name} constructor")
        _add_entity(m, var, ctor.FunctionPath, params, rets)
        args = _arg_names(ctor.Parameters)
        call = f"_first_handle({var}({', '.join(args)}))"
        render.uses_first_handle = True
        if ctor.OverloadIndex == 0:
            out["init"] = {"args": args, "call": call}
        else:
            out["extra_ctors"].append(
                {"def_name": f"new_{ctor.OverloadIndex}", "args": args, "call": call}
            )
    for method in cls.Methods:
        var = _identifier(f"_m_{name}_{method.Name}_{method.OverloadIndex}", "_m")
        params, rets = _sig_exprs(method, f"{name}.{method.Name}")
        _add_entity(m, var, method.FunctionPath, params, rets)
        arg_defs = list(method.Parameters[1:] if method.InstanceRequired else method.Parameters)
        args = _arg_names(arg_defs)
        passed = ["self._metaffi_handle", *args] if method.InstanceRequired else args
        out["methods"].append(
            {
                "def_name": _identifier(_suffixed(method.Name, method.OverloadIndex), "m"),
                "static": not method.InstanceRequired,
                "args": args,
                "body": _return_expr(f"{var}({', '.join(passed)})", method, render),
            }
        )
    for fld in cls.Fields:
        prop = _identifier(fld.Name, "field")
        entry: dict = {"name": prop, "getter_body": None, "setter_var": None}
        if fld.Getter is not None:
            var = _identifier(f"_p_{name}_{prop}_get", "_p")
            params, rets = _sig_exprs(fld.Getter, f"{name}.{prop} getter")
            _add_entity(m, var, fld.Getter.FunctionPath, params, rets)
            entry["getter_body"] = _return_expr(
                f"{var}(self._metaffi_handle)", fld.Getter, render
            )
        if fld.Setter is not None:
            var = _identifier(f"_p_{name}_{prop}_set", "_p")
            params, rets = _sig_exprs(fld.Setter, f"{name}.{prop} setter")
            _add_entity(m, var, fld.Setter.FunctionPath, params, rets)
            entry["setter_var"] = var
        out["fields"].append(entry)
    lookup = parse_function_path(cls.FunctionPath).lookup("class") if cls.FunctionPath else None
    for key in dict.fromkeys(k for k in (cls.Name, lookup) if k):
        render.class_keys.append((key, name))
    return out


def _build_globals(m: dict, g, render: _Render) -> list[dict]:
    out = []
    for role, accessor in (("get", g.Getter), ("set", g.Setter)):
        if accessor is None:
            continue
        var = _identifier(f"_g_{g.Name}_{role}", "_g")
        params, rets = _sig_exprs(accessor, f"global {g.Name} {role}ter")
        _add_entity(m, var, accessor.FunctionPath, params, rets)
        args = _arg_names(accessor.Parameters)
        out.append(
            {
                "def_name": _identifier(accessor.Name, f"{role}_{g.Name}"),
                "args": args,
                "body": _return_expr(f"{var}({', '.join(args)})", accessor, render),
            }
        )
    return out


def _runtime_plugin_for(module: ModuleDefinition, options: dict[str, str]) -> str:
    plugin = options.get("runtime_plugin") or module.Tags.get("runtime_plugin")
    if not plugin:
        raise CompileError(
            f"module {module.Name!r} names no runtime plugin "
            "(set the module tag runtime_plugin or pass runtime_plugin=... )"
        )
    return plugin


def generate_host_wrapper(idl: IDLDefinition, options: dict[str, str] | None = None) -> str:
    options = options or {}
    render = _Render(
        source=idl.IDLFileNameWithExtension or idl.IDLSource or "<memory>",
        guest_lib_expr=repr(idl.MetaFFIGuestLib),
    )
    top_level: list[str] = []
    for i, module in enumerate(idl.Modules):
        m: dict = {
            "index": i,
            "name": module.Name,
            "loader": f"_module_{i}",
            "runtime_plugin_expr": repr(_runtime_plugin_for(module, options)),
            "entities": [],
            "functions": [],
            "classes": [],
            "globals": [],
        }
        for fn in module.Functions:
            m["functions"].append(_build_function(m, fn, render))
        for cls in module.Classes:
            m["classes"].append(_build_class(m, cls, render))
        for g in module.Globals:
            m["globals"].extend(_build_globals(m, g, render))
        render.modules.append(m)
        render.has_entities = render.has_entities or bool(m["entities"])
        top_level.extend(f["def_name"] for f in m["functions"])
        top_level.extend(c["name"] for c in m["classes"])
        top_level.extend(g["def_name"] for g in m["globals"])
    duplicates = sorted({n for n in top_level if top_level.count(n) > 1})
    if duplicates:
        raise CompileError(f"generated names collide: {', '.join(duplicates)}")
    return _env.get_template("host_wrapper.py.j2").render(r=render)


def output_filename(idl: IDLDefinition) -> str:
    stem = Path(idl.IDLFileNameWithExtension or idl.IDLSource or "generated").stem
    return f"{_identifier(stem, 'generated')}_metaffi_host.py"


def compile_from_host(idl_json: str, output_dir: str, host_options: str = "") -> Path:
    """Generate the wrapper module into output_dir; returns the file path."""
    idl = idl_from_json(idl_json)
    source = generate_host_wrapper(idl, parse_options(host_options))
    target = Path(output_dir) / output_filename(idl)
    try:
        target.write_text(source, encoding="utf-8")
    except OSError as exc:
        raise CompileError(f"cannot write {target}: {exc}") from None
    return target
