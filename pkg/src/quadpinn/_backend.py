"""Select the numerical kernel backend at import time.

The compiled extension ``quadpinn._ckernels`` is preferred.  Setting the
environment variable ``QUADPINN_BACKEND`` to ``python`` forces the numpy
fallback, and ``cython`` makes a missing extension an import error.
"""

from __future__ import annotations

import importlib
import os
from types import ModuleType

ENV_VAR = "QUADPINN_BACKEND"


def load(name: str) -> ModuleType:
    """Return the kernel module for ``name`` (``"cython"`` or ``"python"``)."""
    if name == "cython":
        return importlib.import_module("quadpinn._ckernels")
    if name == "python":
        return importlib.import_module("quadpinn._pykernels")
    raise ValueError(f"unknown backend {name!r}; expected 'cython' or 'python'")


def available() -> list[str]:
    names = []
    for name in ("cython", "python"):
        try:
            load(name)
        except ImportError:
            continue
        names.append(name)
    return names


def _select() -> ModuleType:
    choice = os.environ.get(ENV_VAR, "auto").strip().lower()
    if choice in ("python", "cython"):
        return load(choice)
    try:
        return load("cython")
    except ImportError:
        return load("python")


kernels = _select()
BACKEND = kernels.BACKEND_NAME
