"""In-process indirect interoperability runtime.

Foreign runtimes load as plugins over a stable ABI; values cross the
boundary as Common Data Types; every foreign entity is invoked through a
uniform XCall. See README.md for the tour.
"""

from .api import (
    Caller,
    MetaFFIError,
    MetaFFIModule,
    MetaFFIRuntime,
    make_host_callable,
    release_handle,
)
from .cdt import CDT, CDTS, CallableValue, HandleValue
from .types import MetaFFITypeInfo, MetaFFITypes, type_name_to_constant
from .xcall import XCall, invoke_xcall

__version__ = "0.1.0"

__all__ = [
    "CDT",
    "CDTS",
    "CallableValue",
    "Caller",
    "HandleValue",
    "MetaFFIError",
    "MetaFFIModule",
    "MetaFFIRuntime",
    "MetaFFITypeInfo",
    "MetaFFITypes",
    "XCall",
    "__version__",
    "invoke_xcall",
    "make_host_callable",
    "release_handle",
    "type_name_to_constant",
]
