"""Hot-loop kernels with a compiled backend and a pure-Python fallback.

The compiled extension is used when importable; set ``ARBCSIM_PURE_PYTHON=1``
to force the fallback.
"""
import os

from . import _pykernel
from ._pykernel import (  # noqa: F401
    CC, CV, PARAM_FIELDS, REASON_CUTOFF, REASON_CV_TIMER, REASON_MIN_CURRENT,
    REASON_NONE, TC, TERMINATED, TIME_EPS_H, advance, check_terminal,
)

python_profile_trajectory = _pykernel.profile_trajectory

try:
    from ._core import profile_trajectory as cython_profile_trajectory
except ImportError:  # extension not built
    cython_profile_trajectory = None

if cython_profile_trajectory is not None and not os.environ.get("ARBCSIM_PURE_PYTHON"):
    profile_trajectory = cython_profile_trajectory
    BACKEND = "cython"
else:
    profile_trajectory = python_profile_trajectory
    BACKEND = "python"
