import os
import subprocess
import sys

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from arbcsim import _kernels, battery
from arbcsim.battery import ProfileParams

needs_cython = pytest.mark.skipif(_kernels.cython_profile_trajectory is None,
                                  reason="compiled extension not built")


def _both(params, dt_h):
    n = int(np.ceil(params.session_cutoff_h / dt_h)) + 2
    a = _kernels.python_profile_trajectory(params.packed(), dt_h, n)
    b = _kernels.cython_profile_trajectory(params.packed(), dt_h, n)
    return a, b


@needs_cython
def test_compiled_backend_is_default():
    if not os.environ.get("ARBCSIM_PURE_PYTHON"):
        assert _kernels.BACKEND == "cython"


@needs_cython
@pytest.mark.parametrize("params", [ProfileParams(), ProfileParams(cv_decay_tau_h=0.2),
                                    ProfileParams(cv_timer_h=0.4, cv_decay_tau_h=9.0)])
def test_backends_bit_identical(params):
    a, b = _both(params, 1.0 / 3600.0)
    for x, y in zip(a[:5], b[:5]):
        assert x.dtype == y.dtype
        assert np.array_equal(x, y)
    assert a[5] == b[5]


@needs_cython
@settings(max_examples=15, deadline=None)
@given(st.floats(250.0, 1000.0), st.floats(0.05, 5.0), st.floats(0.05, 1.0), st.floats(1.0, 120.0))
def test_backends_bit_identical_random(i_cc, tau, tc, dt_s):
    params = ProfileParams(i_cc=i_cc, cv_decay_tau_h=tau, tc_duration_h=tc)
    a, b = _both(params, dt_s / 3600.0)
    assert all(np.array_equal(x, y) for x, y in zip(a[:5], b[:5])) and a[5] == b[5]


def test_explicit_backend_argument():
    traj = battery.profile_trajectory(ProfileParams(), 60 / 3600, backend=_kernels.python_profile_trajectory)
    assert traj.termination_reason == "session_cutoff"


@pytest.mark.parametrize("name", ["python_profile_trajectory", "cython_profile_trajectory"])
def test_too_few_ticks_reported(name):
    kernel = getattr(_kernels, name)
    if kernel is None:
        pytest.skip("compiled extension not built")
    with pytest.raises(RuntimeError, match="did not terminate"):
        kernel(ProfileParams().packed(), 1 / 3600, 10)


def test_env_var_forces_fallback():
    out = subprocess.run(
        [sys.executable, "-c", "from arbcsim import _kernels; print(_kernels.BACKEND)"],
        env={**os.environ, "ARBCSIM_PURE_PYTHON": "1"}, capture_output=True, text=True, check=True,
    )
    assert out.stdout.strip() == "python"
