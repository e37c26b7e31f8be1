"""Backend selection for the solid-harmonic kernels.

The compiled extension ``blab._kernels`` is used when it has been built;
otherwise (or when ``BLAB_PURE_PYTHON`` is set) the numpy implementation in
``blab._kernels_py`` is used. Both expose ``solid_basis`` and ``eval_expansion``.
"""

from __future__ import annotations

import os
from types import ModuleType

from . import _kernels_py


def _load_compiled() -> ModuleType | None:
    try:
        from . import _kernels  # type: ignore[attr-defined]
    except ImportError:
        return None
    return _kernels


_compiled = _load_compiled()

if os.environ.get("BLAB_PURE_PYTHON") or _compiled is None:
    _impl: ModuleType = _kernels_py
    BACKEND = "python"
else:
    _impl = _compiled
    BACKEND = "compiled"


def get_backend(name: str) -> ModuleType:
    """Return a specific backend module ("python" or "compiled")."""
    if name == "python":
        return _kernels_py
    if name == "compiled":
        if _compiled is None:
            raise ImportError("compiled kernels are not built; run `pip install -e .`")
        return _compiled
    raise ValueError(f"unknown backend {name!r}")


def solid_basis(points, kmax, offsets, norms):
    return _impl.solid_basis(points, kmax, offsets, norms)


def eval_expansion(points, coef, kmax, offsets, norms):
    return _impl.eval_expansion(points, coef, kmax, offsets, norms)
