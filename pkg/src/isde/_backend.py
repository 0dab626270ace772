"""Backend selection: compiled extension when available, NumPy otherwise.

Set ``ISDE_BACKEND=python`` or ``ISDE_BACKEND=compiled`` to force a choice;
the default picks the compiled core if it imports.
"""

from __future__ import annotations

import os

from . import _core_py

_requested = os.environ.get("ISDE_BACKEND", "").strip().lower()

if _requested == "python":
    _impl = _core_py
    BACKEND_NAME = "python"
else:
    try:
        from . import _core as _impl  # type: ignore[no-redef]

        BACKEND_NAME = "compiled"
    except ImportError:
        if _requested == "compiled":
            raise ImportError(
                "ISDE_BACKEND=compiled but the isde._core extension is not built; "
                "run `python setup.py build_ext --inplace`"
            ) from None
        _impl = _core_py
        BACKEND_NAME = "python"

kde_eval = _impl.kde_eval
dp_solve = _impl.dp_solve


def backend_name() -> str:
    """Name of the active backend: 'compiled' or 'python'."""
    return BACKEND_NAME
