"""Backend selection for the transport gather kernels.

The compiled extension is preferred when present; set PORTFLOW_PURE=1 to
force the NumPy fallback (used by the benchmark and for debugging).
"""

import os

if os.environ.get("PORTFLOW_PURE"):
    from . import _transport_py as _impl
else:
    try:
        from . import _transport as _impl  # type: ignore[attr-defined]
    except ImportError:
        from . import _transport_py as _impl

BACKEND = _impl.BACKEND
gather_linear = _impl.gather_linear
interp_accumulate = _impl.interp_accumulate
