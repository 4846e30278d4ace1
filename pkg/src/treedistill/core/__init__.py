"""Numerical core: best-split kernel with compiled and pure-python backends.

The compiled Cython kernel is preferred; when the extension was not built
(or ``TREEDISTILL_NO_EXT=1`` is set) the numpy fallback is used. Both
backends are numerically identical; ``backend_name()`` reports which one
is active.
"""

import os

if os.environ.get("TREEDISTILL_NO_EXT"):
    _HAVE_EXT = False
else:
    try:
        from treedistill.core.split_kernel import best_split_column  # noqa: F401

        _HAVE_EXT = True
    except ImportError:
        _HAVE_EXT = False

if not _HAVE_EXT:
    from treedistill.core.split_py import best_split_column  # noqa: F401


def backend_name():
    """Return "compiled" when the Cython kernel is active, else "python"."""
    return "compiled" if _HAVE_EXT else "python"
