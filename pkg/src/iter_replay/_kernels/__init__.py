"""Dynamics step kernels.

The compiled extension ``_step_cy`` is used when it was built; otherwise the
pure-Python module is imported.  Set ``ITER_REPLAY_PURE_PYTHON=1`` to force
the fallback.
"""

import os

from . import _step_py
from ._params import *  # noqa: F401,F403

if os.environ.get("ITER_REPLAY_PURE_PYTHON", "") not in ("", "0"):
    _impl = _step_py
else:
    try:
        from . import _step_cy as _impl
    except ImportError:  # extension not built
        _impl = _step_py

step_into = _impl.step_into
BACKEND = _impl.BACKEND


def available_backends() -> dict:
    out = {"python": _step_py}
    try:
        from . import _step_cy

        out["cython"] = _step_cy
    except ImportError:
        pass
    return out
