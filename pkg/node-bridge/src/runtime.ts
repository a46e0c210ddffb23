/**
 * The idiomatic host API: load a runtime, load a module, load entities as
 * plain callables, and wrap JS functions so guests can call back. All the
 * CDT/XCall plumbing stays on the runtime side; this layer only converts
 * values and errors.
 *
 * Calls may block: every crossing serializes through the embedded
 * interpreter's global lock.
 */

import { installNodeBridge } from './bridge';
import { MetaFFIError, PyObject, apiModule, pyCall } from './embedded';
import { TypeDesc, toTypeInfoList } from './types';
import { ForeignCallable, fromPy, toPy } from './values';

/** A loaded foreign entity, callable like any function. */
export interface Caller {
  (...args: unknown[]): unknown;
  /** Release the entity's plugin-side context. */
  free(): void;
  readonly functionPath: string;
}

export class MetaFFIModule {
  constructor(private readonly py: PyObject, readonly modulePath: string) {}

  /** Load one entity by function path, e.g. "callable=add". */
  load(functionPath: string, params: TypeDesc[] = [], rets: TypeDesc[] = []): Caller {
    const pyCaller = pyCall(
      this.py.get('load'),
      functionPath,
      toTypeInfoList(params),
      toTypeInfoList(rets)
    );
    const caller = ((...args: unknown[]) =>
      fromPy(pyCall(pyCaller, ...args.map(toPy)))) as Caller;
    caller.free = () => {
      pyCall(pyCaller.get('free'));
    };
    Object.defineProperty(caller, 'functionPath', { value: functionPath });
    return caller;
  }
}

export class MetaFFIRuntime {
  private readonly py: PyObject;

  constructor(readonly runtimePluginName: string) {
    this.py = pyCall(apiModule.get('MetaFFIRuntime'), runtimePluginName);
  }

  loadRuntimePlugin(): void {
    // the 'node' runtime needs this process's JS environment attached
    // before its plugin will load
    if (this.runtimePluginName === 'node') installNodeBridge();
    pyCall(this.py.get('load_runtime_plugin'));
  }

  releaseRuntimePlugin(): void {
    pyCall(this.py.get('release_runtime_plugin'));
  }

  loadModule(modulePath: string): MetaFFIModule {
    return new MetaFFIModule(pyCall(this.py.get('load_module'), modulePath), modulePath);
  }

  makeCallable(
    fn: (...args: unknown[]) => unknown,
    params: TypeDesc[],
    rets: TypeDesc[]
  ): ForeignCallable {
    return makeCallable(fn, params, rets);
  }
}

/**
 * Wrap a JS function as a callable value guests can invoke. Arguments reach
 * fn as converted JS values; the return value crosses back by the declared
 * return types (return an array for more than one).
 */
export function makeCallable(
  fn: (...args: unknown[]) => unknown,
  params: TypeDesc[],
  rets: TypeDesc[]
): ForeignCallable {
  const trampoline = PyObject.func((...raw: unknown[]) => {
    const args = raw.map((a) => (a instanceof PyObject ? fromPy(a) : a));
    const out = fn(...args);
    if (rets.length > 1) {
      if (!Array.isArray(out)) {
        throw new MetaFFIError(`callable declares ${rets.length} returns; return an array`);
      }
      return PyObject.tuple(out.map(toPy));
    }
    return toPy(out);
  });
  const callableValue = pyCall(
    apiModule.get('make_host_callable'),
    trampoline,
    toTypeInfoList(params),
    toTypeInfoList(rets)
  );
  return new ForeignCallable(callableValue);
}
