"""Pick the compiled kernel if it was built, else the numpy fallback.

Set ``CMPAIRS_BACKEND=python`` to force the fallback (the benchmark and the
backend-parametrised tests use :func:`load` directly).
"""
from __future__ import annotations

import importlib
import os

from . import _kernel_py
from ._kernel_py import KernelParams

__all__ = ["KernelParams", "kernel", "load", "available"]


def load(name):
    if name == "python":
        return _kernel_py
    if name == "compiled":
        return importlib.import_module("cmpairs._ckernel")
    raise ValueError(f"unknown backend {name!r}")


def available():
    names = ["python"]
    try:
        load("compiled")
    except ImportError:
        pass
    else:
        names.insert(0, "compiled")
    return names


def _select():
    want = os.environ.get("CMPAIRS_BACKEND", "").strip().lower()
    if want == "python":
        return _kernel_py
    try:
        return load("compiled")
    except ImportError:
        if want == "compiled":
            raise
        return _kernel_py


kernel = _select()
