"""Runtime plugin: the tabular reference guest.

Loaded by file path through plugin discovery; exports the five runtime
plugin symbols, the four entrypoint variants, and the runtime id. The
`engine` attribute exposes runtime state (context / handle-table
accounting) for oracles.
"""

from metaffi.tabular import runtime as engine  # noqa: F401  (oracle access)
from metaffi.tabular.runtime import (  # noqa: F401
    RUNTIME_ID as runtime_id,
    free_runtime,
    free_xcall,
    handle_table,
    live_context_count,
    load_entity,
    load_runtime,
    make_callable,
    xcall_no_params_no_ret,
    xcall_no_params_ret,
    xcall_params_no_ret,
    xcall_params_ret,
)
