"""Kernel backend selection.

``WINDCAST_KERNELS=numpy`` forces the vectorized numpy path; the default is
``numba`` when it imports, else ``numpy``. Both backends share one contract
and are cross-checked by the test suite.
"""

import importlib
import os
from types import ModuleType

_NAMES = ("numba", "numpy")


def load_backend(name: str) -> ModuleType:
    if name not in _NAMES:
        raise ValueError(f"unknown kernel backend {name!r}; choose from {_NAMES}")
    return importlib.import_module(f"._{name}", __name__)


def _default() -> tuple[str, ModuleType]:
    requested = os.environ.get("WINDCAST_KERNELS", "").strip().lower()
    if requested:
        return requested, load_backend(requested)
    try:
        return "numba", load_backend("numba")
    except ImportError:
        return "numpy", load_backend("numpy")


BACKEND, _impl = _default()

normalized_firing = _impl.normalized_firing
design_matrix = _impl.design_matrix
premise_grad = _impl.premise_grad
