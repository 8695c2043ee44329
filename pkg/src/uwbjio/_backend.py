"""Kernel backend selection.

The per-symbol adaptive updates run either through the compiled extension
(`uwbjio._kernels`, built from the Cython source) or through the pure-numpy
twins (`uwbjio._kernels_py`).  The compiled path is preferred when present;
set ``UWBJIO_BACKEND=python`` to force the fallback or ``=cython`` to require
the extension.
"""

from __future__ import annotations

import os

_choice = os.environ.get("UWBJIO_BACKEND", "auto").strip().lower() or "auto"

if _choice in ("auto", "cython", "compiled", "c"):
    try:
        from . import _kernels as kernels  # type: ignore[attr-defined]

        BACKEND = "cython"
    except ImportError:
        if _choice != "auto":
            raise
        from . import _kernels_py as kernels

        BACKEND = "python"
elif _choice in ("python", "numpy", "py"):
    from . import _kernels_py as kernels

    BACKEND = "python"
else:
    raise ImportError(f"unknown UWBJIO_BACKEND value {_choice!r}")
