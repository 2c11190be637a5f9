"""Matching kernel selection.

The Cython extension ``_ckernel`` is used when it has been built; otherwise,
or when the environment variable ``TRANSCASCADE_PURE_PYTHON`` is set to a
non-empty value other than ``0``, the pure-Python ``_pykernel`` is used.
Both expose ``scan`` and ``max_ends`` with identical results.
"""

import os

from . import _pykernel

try:
    from . import _ckernel
except ImportError:  # extension not built
    _ckernel = None

_forced = os.environ.get("TRANSCASCADE_PURE_PYTHON", "") not in ("", "0")
default = _pykernel if (_forced or _ckernel is None) else _ckernel
BACKEND = default.BACKEND


def available() -> list[str]:
    return ["python"] + (["cython"] if _ckernel is not None else [])


def get(name: str | None = None):
    """Kernel module by backend name (``"python"``/``"cython"``), or the default."""
    if name is None:
        return default
    if name == "python":
        return _pykernel
    if name == "cython":
        if _ckernel is None:
            raise RuntimeError("the Cython kernel is not built; run `pip install -e . --no-build-isolation`")
        return _ckernel
    raise ValueError(f"unknown kernel backend {name!r}")
