"""Backend selection for the hot loops.

The compiled Cython module is used when it was built; otherwise the numpy
fallback is loaded. ``GEOMIX_PURE_PYTHON=1`` forces the fallback.
"""

import os

from . import _pykernels

BACKEND = "python"
_impl = _pykernels

if os.environ.get("GEOMIX_PURE_PYTHON", "") not in ("1", "true", "yes"):
    try:
        from . import _ckernels as _impl  # noqa: F811
        BACKEND = "cython"
    except ImportError:  # extension not built
        _impl = _pykernels

radius_pairs = _impl.radius_pairs
min_labels = _impl.min_labels
walk_steps = _impl.walk_steps
grow_set = _impl.grow_set
bfs_distances = _impl.bfs_distances


def backends():
    """Return ``{name: module}`` for every importable backend."""
    out = {"python": _pykernels}
    try:
        from . import _ckernels
        out["cython"] = _ckernels
    except ImportError:
        pass
    return out


def max_threads():
    """Parallelism cap from ``GEOMIX_THREADS`` (default: CPU count)."""
    raw = os.environ.get("GEOMIX_THREADS")
    if raw:
        try:
            return max(1, int(raw))
        except ValueError:
            pass
    return os.cpu_count() or 1
