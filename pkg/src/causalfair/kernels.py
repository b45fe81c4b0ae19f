"""Select the kernel backend at import: compiled if built, otherwise pure Python."""

import numpy as np

from causalfair import _pykernels

try:
    from causalfair import _ckernels
except ImportError:  # extension not built
    _ckernels = None

BACKEND = "cython" if _ckernels is not None else "python"
MAX_COMPILED_NODES = 64


def available_backends():
    return ["cython", "python"] if _ckernels is not None else ["python"]


def get_backend(name=None):
    """Return the kernel module for ``name`` (default: the import-time choice)."""
    name = name or BACKEND
    if name == "cython":
        if _ckernels is None:
            raise ImportError("compiled kernels are not built")
        return _ckernels
    if name == "python":
        return _pykernels
    raise ValueError(f"unknown backend {name!r}")


def dsep(parents, children, x, y, given, backend=None):
    """Dispatch a d-separation query on bitmask adjacency lists."""
    mod = get_backend(backend)
    if mod is _ckernels:
        if len(parents) > MAX_COMPILED_NODES:
            mod = _pykernels
        else:
            if not isinstance(parents, np.ndarray):
                parents = np.asarray(parents, dtype=np.uint64)
                children = np.asarray(children, dtype=np.uint64)
    if mod is _pykernels and isinstance(parents, np.ndarray):
        parents, children = parents.tolist(), children.tolist()
    return mod.dsep(parents, children, x, y, given)


def scan_binary(resolution, eps, tau, exempt_perfect=True, backend=None):
    return get_backend(backend).scan_binary(resolution, eps, tau, exempt_perfect)
