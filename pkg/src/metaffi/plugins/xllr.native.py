"""Runtime plugin: shared-library guests through ctypes trampolines."""

from metaffi import native_runtime as engine  # noqa: F401  (oracle access)
from metaffi.native_runtime import (  # noqa: F401
    RUNTIME_ID as runtime_id,
    free_runtime,
    free_xcall,
    live_context_count,
    load_entity,
    load_runtime,
    make_callable,
    xcall_no_params_no_ret,
    xcall_no_params_ret,
    xcall_params_no_ret,
    xcall_params_ret,
)
