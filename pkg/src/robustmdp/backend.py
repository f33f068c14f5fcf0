"""Kernel backend selection.

The compiled Cython module is used when importable; otherwise the numpy
fallback is loaded.  Set ``ROBUSTMDP_BACKEND=python`` to force the
fallback.
"""
import importlib
import os

_MODULES = {"cython": "robustmdp._kernels", "python": "robustmdp._kernels_py"}


def load(name):
    """Return the kernel module for backend ``name`` ("cython" or "python")."""
    try:
        return importlib.import_module(_MODULES[name])
    except KeyError:
        raise ValueError(f"unknown backend {name!r}") from None


def available():
    names = []
    for name in _MODULES:
        try:
            load(name)
        except ImportError:
            continue
        names.append(name)
    return names


def _select():
    forced = os.environ.get("ROBUSTMDP_BACKEND")
    if forced:
        return forced, load(forced)
    try:
        return "cython", load("cython")
    except ImportError:
        return "python", load("python")


BACKEND, kernels = _select()


def resolve(backend=None):
    """Kernel module for an explicit backend name, or the import-time default."""
    return kernels if backend is None else load(backend)
