/**
 * Boots the CPython interpreter embedded in this Node process (via pymport)
 * and hands out the metaffi runtime's public python modules as raw PyObject
 * handles. Everything else in this package talks to the runtime through the
 * objects exported here.
 *
 * The interpreter snapshots the process environment when it initializes,
 * and pymport initializes it when the addon is first required. METAFFI_HOME
 * must therefore be steered *before* the require below, so that the 'node'
 * runtime plugin shipped in ../plugin is discoverable.
 */

import * as path from 'node:path';

const pluginDir = path.resolve(__dirname, '..', 'plugin');
{
  const existing = process.env.METAFFI_HOME;
  if (!existing) {
    process.env.METAFFI_HOME = pluginDir;
  } else if (!existing.split(path.delimiter).includes(pluginDir)) {
    process.env.METAFFI_HOME = pluginDir + path.delimiter + existing;
  }
}

// deliberate require after the env mutation; a top-level import would hoist
// eslint-disable-next-line @typescript-eslint/no-var-requires
const py = require('pymport') as typeof import('pymport');

export const PyObject = py.PyObject;
export type PyObject = import('pymport').PyObject;
export const pymport = py.pymport;
export const proxify = py.proxify;
export const pyval = py.pyval;

/** Errors crossing out of the runtime, with pymport's prefix stripped. */
export class MetaFFIError extends Error {
  constructor(message: string, options?: { cause?: unknown }) {
    super(message, options);
    this.name = 'MetaFFIError';
  }
}

function normalizeError(e: unknown): Error {
  if (e instanceof Error) {
    return new MetaFFIError(e.message.replace(/^Python exception: /, ''), { cause: e });
  }
  return new MetaFFIError(String(e));
}

/** Call a callable PyObject, mapping interpreter errors to MetaFFIError. */
export function pyCall(fn: PyObject, ...args: unknown[]): PyObject {
  try {
    return fn.call(...args);
  } catch (e) {
    throw normalizeError(e);
  }
}

// the runtime's public surface: host API, type constants, plugin loading,
// and the core registry
export const apiModule = pymport('metaffi.api');
export const typesModule = pymport('metaffi.types');
export const pluginAbiModule = pymport('metaffi.plugin_abi');
export const xllrModule = pymport('metaffi.xllr');

const sysModule = pymport('sys');

/** Interpreter reference count of a python object (sys.getrefcount). */
export function getRefcount(obj: PyObject): number {
  return Number(sysModule.get('getrefcount').call(obj).toJS());
}

/** Introspection used by tests: the embedded interpreter's identity. */
export function interpreterState(): { version: string; sysObjectId: number } {
  const info = sysModule.get('version_info');
  const version = `${info.get('major').toJS()}.${info.get('minor').toJS()}`;
  return { version, sysObjectId: sysModule.id };
}

/** Make a directory importable inside the embedded interpreter. */
export function addImportPath(dir: string): void {
  const sysPath = sysModule.get('path');
  if (!Array.from(sysPath).some((p) => p.toJS() === dir)) {
    sysPath.get('insert').call(0, dir);
  }
}
