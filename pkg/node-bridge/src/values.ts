/**
 * Value conversion between JavaScript and the runtime's decoded python
 * values. Scalars, strings and arrays cross by value; guest objects stay on
 * their side and cross as Handle wrappers; callables cross as opaque
 * ForeignCallable wrappers that can be handed back as arguments.
 */

import { MetaFFIError, PyObject, apiModule, pyCall } from './embedded';

/** An object living in some guest runtime, held through its handle record. */
export class Handle {
  constructor(readonly py: PyObject) {}

  /** Ask the originating runtime to unpin the object. */
  release(): void {
    pyCall(apiModule.get('release_handle'), this.py);
  }
}

/** A callable value received from a guest; opaque, pass it back as an argument. */
export class ForeignCallable {
  constructor(readonly py: PyObject) {}
}

/** JS argument -> value the runtime's host API accepts. */
export function toPy(v: unknown): unknown {
  if (v instanceof Handle || v instanceof ForeignCallable) return v.py;
  if (v instanceof PyObject) return v;
  if (Array.isArray(v)) return PyObject.list(v.map(toPy));
  if (typeof v === 'function') {
    throw new MetaFFIError(
      'bare functions cannot cross the boundary; wrap one with makeCallable(fn, params, rets)'
    );
  }
  return v; // number/bigint/string/boolean/null convert 1:1
}

/** Decoded python result -> idiomatic JS value. */
export function fromPy(v: PyObject): unknown {
  switch (v.type) {
    case 'NoneType':
      return null;
    case 'bool':
    case 'int':
    case 'float':
    case 'str':
      return v.toJS();
    case 'list':
    case 'tuple':
      return v.map((el) => fromPy(el));
    case 'HandleValue':
      return new Handle(v);
    case 'CallableValue':
      return new ForeignCallable(v);
    default:
      return v; // anything else stays a PyObject
  }
}
