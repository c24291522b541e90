"""Selects the simulation kernel at import time.

The compiled extension (``tiersim._core``) and the pure-Python module
(``tiersim._core_py``) implement identical semantics; the extension is just
fast.  Set ``TIERSIM_PURE=1`` to force the fallback, e.g. to compare the
two with ``benchmarks/bench_core.py``.
"""

from __future__ import annotations

import os

from . import _core_py

_impls = {"pure": _core_py}

if os.environ.get("TIERSIM_PURE") != "1":
    try:
        from . import _core  # compiled extension

        _impls["compiled"] = _core
    except ImportError:
        pass

BACKEND = "compiled" if "compiled" in _impls else "pure"


def backend_name() -> str:
    return BACKEND


def available_backends() -> tuple[str, ...]:
    return tuple(sorted(_impls))


def run_sim(prog, cfg, backend: str | None = None) -> dict:
    impl = _impls[backend or BACKEND]
    return impl.run_sim(prog, cfg)
