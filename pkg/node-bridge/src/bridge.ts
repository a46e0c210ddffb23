/**
 * The JavaScript side of the 'node' runtime plugin. The plugin
 * (plugin/xllr.node.py) runs inside the embedded interpreter and owns the
 * five runtime-plugin symbols; this module supplies the function table it
 * calls back into: resolving modules, invoking entities, and pinning JS
 * objects that crossed the boundary as handles.
 *
 * Value convention on this side of the wire:
 *   - scalars, strings and arrays cross by value
 *   - {"__js_object": id} names a pinned JS object (the pin map keeps it
 *     alive until the handle's release)
 *   - {"__foreign": token} is an opaque value of some other runtime; JS code
 *     may only pass it back during the same call
 *   - {"__callable": token} becomes a plain JS function that re-enters the
 *     plugin; valid during the same call only
 */

import * as path from 'node:path';
import { MetaFFIError, PyObject, pluginAbiModule, pyCall } from './embedded';

interface EntitySpec {
  kind: 'callable' | 'attribute';
  name: string;
  instanceRequired: boolean;
  role: 'getter' | 'setter';
}

type Entity = (args: unknown[]) => unknown;
type JsModule = Record<string, unknown>;

const entities = new Map<number, Entity>();
let nextEntityId = 1;

// pinned by identity: one entry per object no matter how many handles exist
const pinsById = new Map<number, { obj: object; count: number }>();
const idsByObject = new WeakMap<object, number>();
let nextPinId = 1;

let pluginModule: PyObject | undefined;

function requirePlugin(): PyObject {
  if (!pluginModule) {
    throw new MetaFFIError('node bridge is not installed; call installNodeBridge() first');
  }
  return pluginModule;
}

// arguments from the plugin arrive as PyObject wrappers
function plain(v: unknown): unknown {
  return v instanceof PyObject ? v.toJS() : v;
}

function pin(obj: object): number {
  const existing = idsByObject.get(obj);
  if (existing !== undefined) {
    pinsById.get(existing)!.count += 1;
    return existing;
  }
  const id = nextPinId++;
  pinsById.set(id, { obj, count: 1 });
  idsByObject.set(obj, id);
  return id;
}

function pinnedObject(id: number): object {
  const entry = pinsById.get(id);
  if (!entry) throw new MetaFFIError(`unknown or released object id ${id}`);
  return entry.obj;
}

function releaseObjectImpl(rawId: unknown): void {
  const id = Number(plain(rawId));
  const entry = pinsById.get(id);
  if (!entry) throw new MetaFFIError(`unknown or released object id ${id}`);
  entry.count -= 1;
  if (entry.count === 0) {
    pinsById.delete(id);
    idsByObject.delete(entry.obj);
  }
}

/** JS value -> wire value bound for the plugin. */
function wrapOutbound(v: unknown): unknown {
  if (v === undefined || v === null) return null;
  const t = typeof v;
  if (t === 'number' || t === 'string' || t === 'boolean' || t === 'bigint') return v;
  if (Array.isArray(v)) return v.map(wrapOutbound);
  if (t === 'object') {
    const m = v as Record<string, unknown>;
    if (m.__js_object !== undefined || m.__foreign !== undefined || m.__callable !== undefined) {
      return v; // already a marker, pass through
    }
  }
  // everything else (objects, class instances, functions) stays JS-owned
  return { __js_object: pin(v as object) };
}

/** Wire value from the plugin -> JS value. */
function unwrapInbound(v: unknown): unknown {
  if (Array.isArray(v)) return v.map(unwrapInbound);
  if (v !== null && typeof v === 'object') {
    const m = v as Record<string, unknown>;
    if (m.__js_object !== undefined) return pinnedObject(Number(m.__js_object));
    if (m.__callable !== undefined) return callableProxy(Number(m.__callable));
    return v; // __foreign stays opaque; plain objects cannot occur
  }
  return v;
}

function callableProxy(token: number): (...args: unknown[]) => unknown {
  return (...args: unknown[]) => {
    const result = pyCall(
      requirePlugin().get('call_foreign_callable'),
      token,
      PyObject.list(args.map(wrapOutbound))
    );
    return unwrapInbound(result.toJS());
  };
}

function resolveModule(modulePath: string): JsModule {
  const looksLikePath =
    path.isAbsolute(modulePath) ||
    modulePath.startsWith('./') ||
    modulePath.startsWith('../') ||
    /\.(cjs|js|json|node)$/.test(modulePath);
  try {
    // eslint-disable-next-line @typescript-eslint/no-var-requires
    return looksLikePath ? require(path.resolve(modulePath)) : require(modulePath);
  } catch (e) {
    throw new MetaFFIError(`cannot load module '${modulePath}': ${(e as Error).message}`);
  }
}

function isClass(fn: unknown): fn is new (...args: unknown[]) => object {
  return typeof fn === 'function' && /^class[\s{]/.test(Function.prototype.toString.call(fn));
}

function asReceiver(modulePath: string, spec: EntitySpec, v: unknown): Record<string, unknown> {
  if (v === null || (typeof v !== 'object' && typeof v !== 'function')) {
    throw new MetaFFIError(
      `'${spec.name}' from '${modulePath}' needs an object instance, got ${typeof v}`
    );
  }
  return v as Record<string, unknown>;
}

function buildEntity(module: JsModule, modulePath: string, spec: EntitySpec): Entity {
  const { kind, name, instanceRequired, role } = spec;
  if (kind === 'callable') {
    if (instanceRequired) {
      return (args) => {
        const [self, ...rest] = args;
        const receiver = asReceiver(modulePath, spec, self);
        const method = receiver[name];
        if (typeof method !== 'function') {
          throw new MetaFFIError(`object from '${modulePath}' has no method '${name}'`);
        }
        return method.apply(receiver, rest);
      };
    }
    const target = module[name];
    if (typeof target !== 'function') {
      throw new MetaFFIError(`module '${modulePath}' has no callable '${name}'`);
    }
    if (isClass(target)) {
      return (args) => Reflect.construct(target as new (...a: unknown[]) => object, args);
    }
    return (args) => (target as (...a: unknown[]) => unknown).apply(module, args);
  }

  // attribute access
  if (instanceRequired) {
    if (role === 'setter') {
      return (args) => {
        asReceiver(modulePath, spec, args[0])[name] = args[1];
      };
    }
    return (args) => {
      const receiver = asReceiver(modulePath, spec, args[0]);
      if (!(name in receiver)) {
        throw new MetaFFIError(`object from '${modulePath}' has no attribute '${name}'`);
      }
      return receiver[name];
    };
  }
  if (!(name in module)) {
    throw new MetaFFIError(`module '${modulePath}' has no attribute '${name}'`);
  }
  if (role === 'setter') {
    return (args) => {
      module[name] = args[0];
    };
  }
  return () => module[name];
}

function loadEntityImpl(rawModulePath: unknown, rawSpec: unknown): number {
  const modulePath = String(plain(rawModulePath));
  const spec = plain(rawSpec) as EntitySpec;
  const entity = buildEntity(resolveModule(modulePath), modulePath, spec);
  const id = nextEntityId++;
  entities.set(id, entity);
  return id;
}

function invokeImpl(rawEntityId: unknown, rawArgs: unknown): unknown {
  const entityId = Number(plain(rawEntityId));
  const entity = entities.get(entityId);
  if (!entity) throw new MetaFFIError(`unknown entity id ${entityId}`);
  const args = (plain(rawArgs) as unknown[]).map(unwrapInbound);
  return wrapOutbound(entity(args));
}

function freeEntityImpl(rawEntityId: unknown): void {
  const entityId = Number(plain(rawEntityId));
  if (!entities.delete(entityId)) {
    throw new MetaFFIError(`unknown entity id ${entityId}`);
  }
}

let installed = false;

/**
 * Install this module as the JS environment behind the 'node' runtime
 * plugin. Idempotent; must run before any host loads the 'node' runtime.
 */
export function installNodeBridge(): void {
  if (installed) return;
  const iface = pyCall(pluginAbiModule.get('discover_and_load_plugin'), 'runtime', 'node');
  const module = iface.get('module');
  pyCall(
    module.get('set_js_bridge'),
    PyObject.fromJS({
      load_entity: loadEntityImpl,
      invoke: invokeImpl,
      free_entity: freeEntityImpl,
      release_object: releaseObjectImpl,
      pinned_count: () => pinsById.size,
    })
  );
  pluginModule = module;
  installed = true;
}

// lifecycle oracles, used by the test suite to prove pin balance

/** JS objects currently pinned for foreign handles. */
export function pinnedCount(): number {
  return pinsById.size;
}

/** Entities currently loaded (xcalls not yet freed). */
export function liveEntityCount(): number {
  return entities.size;
}

/** Plugin-side count of python values pinned for JS (call-scoped tokens). */
export function foreignPinCount(): number {
  return Number(pyCall(requirePlugin().get('foreign_pin_count')).toJS());
}

/** Plugin-side count of live xcall contexts. */
export function liveContextCount(): number {
  return Number(pyCall(requirePlugin().get('live_context_count')).toJS());
}
