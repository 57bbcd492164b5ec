"""Kernel backend selection.

The compiled Cython module is preferred when importable; the numpy
fallback is always available. Set WARDWATT_KERNELS=python or =compiled
to force a backend ("compiled" raises if the extension is missing);
the default "auto" tries compiled first.
"""

from __future__ import annotations

import os

from . import _numpy_impl

_choice = os.environ.get("WARDWATT_KERNELS", "auto")
if _choice not in ("auto", "compiled", "python"):
    raise RuntimeError(
        f"WARDWATT_KERNELS must be auto, compiled, or python, not {_choice!r}"
    )

if _choice == "python":
    _impl = _numpy_impl
else:
    try:
        from . import _compiled as _impl  # type: ignore[no-redef]
    except ImportError:
        if _choice == "compiled":
            raise RuntimeError(
                "WARDWATT_KERNELS=compiled but the extension is not built"
            ) from None
        _impl = _numpy_impl

BACKEND = _impl.BACKEND_NAME

lstm_layer_forward = _impl.lstm_layer_forward
lstm_layer_backward = _impl.lstm_layer_backward
best_split_scan = _impl.best_split_scan
tree_predict = _impl.tree_predict


def available_backends() -> tuple:
    """Importable backend modules, for parity tests and benchmarks."""
    backends = [_numpy_impl]
    try:
        from . import _compiled
    except ImportError:
        pass
    else:
        backends.append(_compiled)
    return tuple(backends)
