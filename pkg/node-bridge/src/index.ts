export {
  MetaFFIError,
  PyObject,
  getRefcount,
  interpreterState,
  addImportPath,
  pymport,
  proxify,
  pyCall,
  apiModule,
  typesModule,
  pluginAbiModule,
  xllrModule,
} from './embedded';
export { Handle, ForeignCallable, toPy, fromPy } from './values';
export { ScalarTypeName, TypeName, TypeSpec, TypeDesc, toTypeInfo, toTypeInfoList } from './types';
export { MetaFFIRuntime, MetaFFIModule, Caller, makeCallable } from './runtime';
export {
  installNodeBridge,
  pinnedCount,
  liveEntityCount,
  foreignPinCount,
  liveContextCount,
} from './bridge';
