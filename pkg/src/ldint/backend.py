"""Kernel backend selection.

The compiled extension is preferred when importable; the pure-Python
kernels are the fallback and define the reference semantics.  Set
LDINT_PURE_PYTHON=1 to force the fallback.
"""

import os

from . import _kernels_py

if os.environ.get("LDINT_PURE_PYTHON") == "1":
    kernels = _kernels_py
else:
    try:
        from . import _kernels as kernels  # type: ignore[no-redef]
    except ImportError:
        kernels = _kernels_py

BACKEND = kernels.BACKEND

SYSTEM_IDS = {
    "sho": _kernels_py.SYS_SHO,
    "pendulum": _kernels_py.SYS_PENDULUM,
    "damped": _kernels_py.SYS_DAMPED,
}

METHOD_IDS = {
    "euler": _kernels_py.M_EULER,
    "rk2": _kernels_py.M_RK2,
    "rk4": _kernels_py.M_RK4,
    "verletq": _kernels_py.M_VERLET_Q,
    "verletp": _kernels_py.M_VERLET_P,
    "ld2": _kernels_py.M_LD2,
    "ld4": _kernels_py.M_LD4,
}
