"""Fringe-fit kernel with a compiled core and a pure-numpy fallback.

The Monte-Carlo pipeline runs thousands of fringe fits, so the model
evaluation and Levenberg-Marquardt loop are the package's hot path.  At
import time the Cython extension is preferred when it has been built;
otherwise the numpy implementation is used.  Set ``SPPDECOH_BACKEND`` to
``cython`` or ``python`` to force one (forcing ``cython`` raises if the
extension is missing).  Both implement the identical algorithm; the
benchmark in ``benchmarks/bench_fringe_fit.py`` compares them.
"""

import os

from . import py_backend

_forced = os.environ.get("SPPDECOH_BACKEND")

if _forced == "python":
    _impl = py_backend
elif _forced == "cython":
    from . import _cyfringe as _impl
elif _forced:
    raise ValueError(
        f"SPPDECOH_BACKEND must be 'cython' or 'python', got {_forced!r}"
    )
else:
    try:
        from . import _cyfringe as _impl
    except ImportError:
        _impl = py_backend

BACKEND = _impl.BACKEND_NAME
fringe_curve = _impl.fringe_curve
lm_fit_fringe = _impl.lm_fit_fringe
