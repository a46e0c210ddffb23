/**
 * Type descriptors for declaring parameter and return signatures from
 * TypeScript. Names mirror the published constants manifest; validation and
 * the name-to-constant mapping stay on the runtime side so there is exactly
 * one normative table.
 */

import { PyObject, pyCall, typesModule } from './embedded';

export type ScalarTypeName =
  | 'float64' | 'float32'
  | 'int8' | 'int16' | 'int32' | 'int64'
  | 'uint8' | 'uint16' | 'uint32' | 'uint64'
  | 'bool'
  | 'char8' | 'string8' | 'char16' | 'string16' | 'char32' | 'string32'
  | 'handle' | 'callable' | 'any' | 'null' | 'size' | 'type';

export type TypeName = ScalarTypeName | `${ScalarTypeName}_array` | 'array';

export interface TypeSpec {
  type: TypeName;
  /** Guest-side name (e.g. a class name) carried with handle types. */
  alias?: string;
  /** 0 scalar, >0 fixed array depth, -1 dynamic/mixed depth. */
  dimensions?: number;
}

export type TypeDesc = TypeName | TypeSpec;

/** Build the runtime's type-info object for one declared parameter/return. */
export function toTypeInfo(desc: TypeDesc): PyObject {
  const spec: TypeSpec = typeof desc === 'string' ? { type: desc } : desc;
  const constant = pyCall(typesModule.get('type_name_to_constant'), spec.type);
  return pyCall(
    typesModule.get('MetaFFITypeInfo'),
    constant,
    spec.alias ?? null,
    spec.dimensions ?? 0
  );
}

export function toTypeInfoList(descs: readonly TypeDesc[]): PyObject {
  return PyObject.list(descs.map(toTypeInfo));
}
