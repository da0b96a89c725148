"""Backend selection: compiled extension if built, numpy fallback otherwise."""

from __future__ import annotations

try:
    from . import _core as core

    HAVE_COMPILED = True
except ImportError:  # pragma: no cover - depends on the build
    from . import _core_py as core

    HAVE_COMPILED = False


def get_core(force_python: bool = False):
    if force_python:
        from . import _core_py

        return _core_py
    return core
